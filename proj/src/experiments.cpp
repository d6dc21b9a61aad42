/*
 * Copyright 2026 The tattn authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "experiments.hpp"

#include "tattn/basis.hpp"
#include "tattn/cost_model.hpp"
#include "tattn/kernel.hpp"
#include "tattn/philox.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <new>
#include <ostream>
#include <thread>

namespace tattn::bench {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string machine_string() {
  utsname u{};
  if (uname(&u) != 0) return "unknown";
  return std::string(u.sysname) + "-" + u.release + "-" + u.machine;
}

/// Runs fn(0..count-1) on a bounded pool. Each index owns its outputs, so
/// scheduling cannot change results, only their completion order.
void parallel_cells(int workers, int count, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

AttendResult attend_dispatch(const TokenBatch& tokens, const BasisFamily& family,
                             std::int64_t chunk, PrecisionMode mode, DenominatorPolicy policy) {
  if (mode == PrecisionMode::kSingle)
    return chunk > 0 ? attend_scan<float>(tokens, family, chunk, policy)
                     : attend_stream<float>(tokens, family, policy);
  return chunk > 0 ? attend_scan<double>(tokens, family, chunk, policy)
                   : attend_stream<double>(tokens, family, policy);
}

struct ErrAccum {
  std::vector<double> abs_errors;
  double max_abs = 0.0;

  void add(double err) {
    abs_errors.push_back(err);
    max_abs = std::max(max_abs, err);
  }
};

constexpr double kLogFloor = 1e-16;

double log10_floored(double x) { return std::log10(std::max(x, kLogFloor)); }

struct BasicStats {
  double mean_log10 = 0.0;
  double median_log10 = 0.0;
  double max_log10 = -16.0;
  double median_abs = 0.0;
  double max_abs = 0.0;
};

BasicStats summarize(std::vector<double>& abs_errors) {
  BasicStats s;
  if (abs_errors.empty()) return s;
  std::sort(abs_errors.begin(), abs_errors.end());
  const std::size_t n = abs_errors.size();
  s.median_abs = abs_errors[n / 2];
  s.max_abs = abs_errors.back();
  s.max_log10 = log10_floored(s.max_abs);
  s.median_log10 = log10_floored(s.median_abs);
  double sum = 0.0;
  for (double e : abs_errors) sum += log10_floored(e);
  s.mean_log10 = sum / static_cast<double>(n);
  return s;
}

struct CellWork {
  int head_width = 0;
  int truncation_order = 0;
};

std::vector<CellWork> make_cells(const ExperimentConfig& config) {
  std::vector<CellWork> cells;
  for (int d : config.head_widths)
    for (int order : config.truncation_orders) cells.push_back({d, order});
  return cells;
}

struct CellOutputs {
  CellStats stats;
  std::vector<PositionBucketStats> buckets;
};

CellOutputs run_cell(const ExperimentConfig& config, const CellWork& cell, bool bucketed,
                     const TokenBatch* provided_tokens) {
  const int d = cell.head_width;
  const auto family = build_basis_family(d, cell.truncation_order);
  const auto tokens = provided_tokens
                          ? *provided_tokens
                          : sample_token_batch(config.seed, static_cast<std::uint64_t>(d),
                                               config.context_length, d, d);
  const auto policy = config.degree0_fallback ? DenominatorPolicy::kFallbackUniform
                                              : DenominatorPolicy::kFlagNan;
  const auto ours = attend_dispatch(tokens, family, config.chunk_size, config.precision, policy);
  const auto oracle = conventional_attention(tokens, family.scale);

  const std::int64_t n_tokens = tokens.size();
  CellOutputs out;
  out.stats.head_width = d;
  out.stats.truncation_order = cell.truncation_order;
  out.stats.tokens = n_tokens;
  out.stats.degenerate = static_cast<std::int64_t>(ours.degenerate_tokens.size());
  out.stats.measured = n_tokens - out.stats.degenerate;

  std::vector<bool> degenerate(static_cast<std::size_t>(n_tokens), false);
  for (auto t : ours.degenerate_tokens) degenerate[static_cast<std::size_t>(t)] = true;

  const int buckets_needed =
      bucketed ? 64 - static_cast<int>(__builtin_clzll(static_cast<unsigned long long>(n_tokens)))
               : 0;
  std::vector<ErrAccum> per_bucket(static_cast<std::size_t>(std::max(0, buckets_needed)));
  std::vector<std::int64_t> bucket_degenerate(per_bucket.size(), 0);
  ErrAccum all;

  for (std::int64_t t = 0; t < n_tokens; ++t) {
    const int b = 63 - static_cast<int>(__builtin_clzll(static_cast<unsigned long long>(t + 1)));
    if (degenerate[static_cast<std::size_t>(t)]) {
      if (bucketed) ++bucket_degenerate[static_cast<std::size_t>(b)];
      continue;
    }
    for (int j = 0; j < tokens.value_width(); ++j) {
      const double err = std::abs(ours.outputs(t, j) - oracle.outputs(t, j));
      all.add(err);
      if (bucketed) per_bucket[static_cast<std::size_t>(b)].add(err);
    }
  }

  const auto s = summarize(all.abs_errors);
  out.stats.mean_log10 = s.mean_log10;
  out.stats.median_log10 = s.median_log10;
  out.stats.max_log10 = s.max_log10;
  out.stats.median_abs = s.median_abs;
  out.stats.max_abs = s.max_abs;

  for (std::size_t b = 0; b < per_bucket.size(); ++b) {
    const std::int64_t lo = std::int64_t{1} << b;
    if (lo > n_tokens) break;
    PositionBucketStats ps;
    ps.head_width = d;
    ps.truncation_order = cell.truncation_order;
    ps.position_lo = lo;
    ps.position_hi = std::min(n_tokens, (std::int64_t{2} << b) - 1);
    ps.count = static_cast<std::int64_t>(per_bucket[b].abs_errors.size());
    ps.degenerate = bucket_degenerate[b];
    const auto bs = summarize(per_bucket[b].abs_errors);
    ps.mean_log10 = bs.mean_log10;
    ps.median_log10 = bs.median_log10;
    ps.max_log10 = bs.max_log10;
    out.buckets.push_back(ps);
  }
  return out;
}

ErrorSummary run_grid(const ExperimentConfig& config, bool bucketed,
                      const TokenBatch* provided_tokens = nullptr) {
  if (config.context_length < 1) throw domain_error("experiment: context_length must be >= 1");
  if (config.head_widths.empty() || config.truncation_orders.empty())
    throw domain_error("experiment: empty grid");

  const auto cells = make_cells(config);
  std::vector<CellOutputs> outputs(cells.size());
  parallel_cells(config.workers, static_cast<int>(cells.size()), [&](int i) {
    outputs[static_cast<std::size_t>(i)] =
        run_cell(config, cells[static_cast<std::size_t>(i)], bucketed, provided_tokens);
  });

  ErrorSummary summary;
  for (auto& out : outputs) {
    summary.cells.push_back(out.stats);
    for (auto& b : out.buckets) summary.buckets.push_back(b);
  }
  return summary;
}

void write_common_prefix(std::ostream& os, const ExperimentConfig& config, const CellStats& c) {
  os << c.head_width << ',' << c.truncation_order << ',' << c.tokens << ',' << config.seed << ','
     << precision_name(config.precision) << ',' << config.chunk_size;
}

}  // namespace

const char* precision_name(PrecisionMode mode) {
  return mode == PrecisionMode::kDouble ? "double" : "single";
}

TokenBatch sample_token_batch(std::uint64_t seed, std::uint64_t stream, std::int64_t n, int d_k,
                              int d_v) {
  if (n < 1 || d_k < 1 || d_v < 1) throw domain_error("sample_token_batch: invalid shape");
  Philox4x32 rng(seed, stream);
  TokenBatch b;
  b.queries.resize(n, d_k);
  b.keys.resize(n, d_k);
  b.values.resize(n, d_v);
  for (std::int64_t t = 0; t < n; ++t) {
    for (int j = 0; j < d_k; ++j) b.queries(t, j) = rng.next_normal();
    for (int j = 0; j < d_k; ++j) b.keys(t, j) = rng.next_normal();
    for (int j = 0; j < d_v; ++j) b.values(t, j) = rng.next_normal();
  }
  return b;
}

namespace {

void write_recon_csv(const ExperimentConfig& config, const ErrorSummary& summary,
                     std::ostream& csv) {
  csv << "d,p_max,n,seed,precision,chunk,measured_tokens,degenerate_tokens,"
         "mean_log10_err,median_log10_err,max_log10_err,median_abs_err,max_abs_err\n";
  for (const auto& c : summary.cells) {
    write_common_prefix(csv, config, c);
    csv << ',' << c.measured << ',' << c.degenerate << ',' << fmt(c.mean_log10) << ','
        << fmt(c.median_log10) << ',' << fmt(c.max_log10) << ',' << fmt(c.median_abs) << ','
        << fmt(c.max_abs) << '\n';
  }
}

}  // namespace

ErrorSummary run_reconstruction(const ExperimentConfig& config, std::ostream* csv) {
  auto summary = run_grid(config, /*bucketed=*/false);
  if (csv) write_recon_csv(config, summary, *csv);
  return summary;
}

ErrorSummary run_reconstruction_on(const TokenBatch& tokens, const ExperimentConfig& config,
                                   std::ostream* csv) {
  tokens.validate();
  if (tokens.key_width() != tokens.value_width())
    throw domain_error("run_reconstruction_on: token stream must have d_K = d_V");
  ExperimentConfig pinned = config;
  pinned.head_widths = {tokens.key_width()};
  pinned.context_length = tokens.size();
  auto summary = run_grid(pinned, /*bucketed=*/false, &tokens);
  if (csv) write_recon_csv(pinned, summary, *csv);
  return summary;
}

ErrorSummary run_error_by_position(const ExperimentConfig& config, std::ostream* csv) {
  auto summary = run_grid(config, /*bucketed=*/true);
  if (csv) {
    *csv << "d,p_max,n,seed,precision,chunk,bucket_lo,bucket_hi,count,degenerate_tokens,"
            "mean_log10_err,median_log10_err,max_log10_err\n";
    for (const auto& b : summary.buckets) {
      *csv << b.head_width << ',' << b.truncation_order << ',' << config.context_length << ','
           << config.seed << ',' << precision_name(config.precision) << ',' << config.chunk_size
           << ',' << b.position_lo << ',' << b.position_hi << ',' << b.count << ','
           << b.degenerate << ',' << fmt(b.mean_log10) << ',' << fmt(b.median_log10) << ','
           << fmt(b.max_log10) << '\n';
    }
  }
  return summary;
}

namespace {

struct TokenSource {
  Philox4x32 rng;
  int d_k;
  int d_v;

  TokenSource(std::uint64_t seed, std::uint64_t stream, int dk, int dv)
      : rng(seed, stream), d_k(dk), d_v(dv) {}

  void fill(Eigen::MatrixXd& q, Eigen::MatrixXd& k, Eigen::MatrixXd& v, std::int64_t n) {
    q.resize(n, d_k);
    k.resize(n, d_k);
    v.resize(n, d_v);
    for (std::int64_t t = 0; t < n; ++t) {
      for (int j = 0; j < d_k; ++j) q(t, j) = rng.next_normal();
      for (int j = 0; j < d_k; ++j) k(t, j) = rng.next_normal();
      for (int j = 0; j < d_v; ++j) v(t, j) = rng.next_normal();
    }
  }
};

/// Median of `reps` timed windows of `window` steps each, one untimed
/// warmup window first. step(t) runs step t of the current window.
double median_window_seconds(int reps, std::int64_t window,
                             const std::function<void(std::int64_t)>& step,
                             const std::function<void()>& prepare) {
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r <= reps; ++r) {
    prepare();
    const auto start = Clock::now();
    for (std::int64_t t = 0; t < window; ++t) step(t);
    const double elapsed = seconds_since(start);
    if (r > 0) times.push_back(elapsed);  // r = 0 is warmup
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2] / static_cast<double>(window);
}

}  // namespace

void run_perf(const ExperimentConfig& config, std::ostream& csv) {
  if (config.repetitions < 1) throw domain_error("run_perf: repetitions must be >= 1");
  const std::string machine = machine_string();
  csv << "arm,d,p_max,n,reps,per_token_seconds,state_bytes,status,timing_nondeterministic,"
         "machine\n";

  auto grid = config.perf_context_lengths;
  std::sort(grid.begin(), grid.end());

  // Accumulated-state arm: advance one long stream, measuring update+readout
  // windows at each grid length. Per-token work does not depend on how far
  // the stream has advanced; the sweep demonstrates exactly that.
  for (int d : config.head_widths) {
    for (int order : config.truncation_orders) {
      const auto family = build_basis_family(d, order);
      auto state = init_state(family, d);
      AttendWorkspace<> ws(family);
      TokenSource source(config.seed, 0x0075ull << 32 | static_cast<unsigned>(d), d, d);
      Eigen::MatrixXd q, k, v;
      std::int64_t position = 0;
      constexpr std::int64_t kWindow = 256;

      for (std::int64_t n : grid) {
        // Advance with bulk updates to the measurement point.
        while (position < n - kWindow) {
          const std::int64_t block = std::min<std::int64_t>(8192, n - kWindow - position);
          source.fill(q, k, v, block);
          update_state_batch(state, k, v, family);
          position += block;
        }
        const double per_token = median_window_seconds(
            config.repetitions, kWindow,
            [&](std::int64_t t) {
              update_state(state, k.row(t).transpose(), v.row(t).transpose(), family, ws);
              volatile double sink =
                  read_output(state, q.row(t).transpose(), family, ws,
                              DenominatorPolicy::kFallbackUniform)
                      .denominator;
              (void)sink;
            },
            [&] { source.fill(q, k, v, kWindow); });
        position += static_cast<std::int64_t>(config.repetitions + 1) * kWindow;
        csv << "state," << d << ',' << order << ',' << n << ',' << config.repetitions << ','
            << fmt(per_token) << ','
            << state.element_count() * static_cast<std::int64_t>(sizeof(double)) << ",ok,1,"
            << machine << '\n';
      }
    }
  }

  // Conventional arm: one readout against a materialized KV history of n
  // tokens. History length is capped; rows above the cap are recorded, not
  // crashed.
  for (int d : config.head_widths) {
    const double scale = std::sqrt(static_cast<double>(d));
    for (std::int64_t n : grid) {
      const std::int64_t kv_bytes = 2 * n * d * static_cast<std::int64_t>(sizeof(double));
      if (n > config.conventional_max_context) {
        csv << "conventional," << d << ",0," << n << ',' << config.repetitions << ",nan,"
            << kv_bytes << ",capped,1," << machine << '\n';
        continue;
      }
      try {
        TokenSource source(config.seed, 0x00C0ull << 32 | static_cast<unsigned>(d), d, d);
        Eigen::MatrixXd q, k, v;
        source.fill(q, k, v, n);
        const Eigen::MatrixXd keys = k;
        const Eigen::MatrixXd values = v;
        constexpr std::int64_t kWindow = 16;
        Eigen::MatrixXd probes;
        const double per_token = median_window_seconds(
            config.repetitions, kWindow,
            [&](std::int64_t t) {
              volatile double sink =
                  softmax_attend_one(probes.row(t).transpose(), keys, values, scale).sum();
              (void)sink;
            },
            [&] {
              Eigen::MatrixXd pk, pv;
              source.fill(probes, pk, pv, kWindow);
            });
        csv << "conventional," << d << ",0," << n << ',' << config.repetitions << ','
            << fmt(per_token) << ',' << kv_bytes << ",ok,1," << machine << '\n';
      } catch (const std::bad_alloc&) {
        csv << "conventional," << d << ",0," << n << ',' << config.repetitions << ",nan,"
            << kv_bytes << ",capped,1," << machine << '\n';
      }
    }
  }
}

void emit_cost_tables(const ExperimentConfig& config, std::ostream& csv,
                      std::ostream* alpha_csv) {
  csv << "d_k,d_v,P,n,heads,hidden_state,flops_ours,kv_cache,flops_conv,naive_features,"
         "crossover_n,over_budget\n";
  for (int d : config.head_widths) {
    for (int order : config.truncation_orders) {
      for (std::int64_t n : config.cost_context_lengths) {
        for (int heads : config.head_counts) {
          const auto r = build_cost_report(d, d, order, n, heads);
          csv << r.d_k << ',' << r.d_v << ',' << r.truncation_order << ',' << r.context_length
              << ',' << r.heads << ',' << r.hidden_state_elements << ','
              << r.flops_per_token.to_string() << ',' << r.kv_cache_elements << ','
              << r.conventional_flops_per_token << ',' << r.naive_feature_elements << ','
              << r.crossover_n << ',' << (r.hidden_state_elements > kDefaultElementBudget ? 1 : 0)
              << '\n';
        }
      }
    }
  }

  if (alpha_csv) {
    *alpha_csv << "d_k,c,p,alpha,half_resolution,single_resolution\n";
    int max_order = 1;
    for (int order : config.truncation_orders) max_order = std::max(max_order, order);
    const double half_res = std::pow(2.0, -10);
    const double single_res = std::pow(2.0, -23);
    for (int d : config.head_widths) {
      const double c = std::sqrt(static_cast<double>(d));
      double alpha = 1.0;
      for (int p = 0; p < max_order; ++p) {
        if (p > 0) alpha /= static_cast<double>(p) * c;
        *alpha_csv << d << ',' << fmt(c) << ',' << p << ',' << fmt(alpha) << ',' << fmt(half_res)
                   << ',' << fmt(single_res) << '\n';
      }
    }
  }
}

}  // namespace tattn::bench
