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

#include "selfcheck.hpp"

#include "experiments.hpp"
#include "tattn/attention.hpp"
#include "tattn/basis.hpp"
#include "tattn/cost_model.hpp"
#include "tattn/kernel.hpp"
#include "tattn/philox.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace tattn::selfcheck {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Eigen::VectorXd sample_normal(Philox4x32& rng, int d) {
  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x[i] = rng.next_normal();
  return x;
}

std::string fmt(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", x);
  return buf;
}

struct Timer {
  Clock::time_point start = Clock::now();
  double elapsed() const { return seconds_since(start); }
};

}  // namespace

CheckResult check_basis_counts() {
  Timer timer;
  CheckResult r{1, "basis row counts and multiplicity sums exact", true, 0.0, ""};
  for (int d = 1; d <= 8 && r.pass; ++d) {
    for (int p = 0; p <= 5 && r.pass; ++p) {
      const auto basis = build_degree_basis(d, p);
      const std::int64_t want_rows = binomial(d + p - 1, p);
      const std::int64_t mult_sum = basis.multiplicities.sum();
      if (basis.basis_size() != want_rows || mult_sum != ipow(d, p)) {
        r.pass = false;
        r.detail = "mismatch at d=" + std::to_string(d) + " p=" + std::to_string(p);
      }
    }
  }
  r.seconds = timer.elapsed();
  if (r.pass && r.seconds >= 10.0) {
    r.pass = false;
    r.detail = "exceeded 10 s budget";
  }
  if (r.pass) r.detail = "d=1..8, p=0..5: counts = C(d+p-1,p), sums = d^p";
  return r;
}

CheckResult check_polynomial_identity() {
  Timer timer;
  CheckResult r{2, "packed weighted inner product equals (q.k)^p", true, 0.0, ""};
  Philox4x32 rng(0xC2, 0);
  double worst = 0.0;
  for (int d = 1; d <= 8 && r.pass; ++d) {
    for (int p = 0; p <= 5 && r.pass; ++p) {
      const auto basis = build_degree_basis(d, p);
      for (int rep = 0; rep < 100; ++rep) {
        const Eigen::VectorXd q = sample_normal(rng, d);
        const Eigen::VectorXd k = sample_normal(rng, d);
        const double got =
            weighted_inner<double>(phi<double>(q, basis), phi<double>(k, basis), basis);
        const double want = std::pow(q.dot(k), p);
        // Tolerance is relative to the monomial mass (sum_i |q_i k_i|)^p,
        // the conditioning scale of the packed sum; a ratio against (q.k)^p
        // alone is ill-posed near orthogonal pairs.
        const double scale = std::max(1.0, std::pow(q.cwiseAbs().dot(k.cwiseAbs()), p));
        const double rel = std::abs(got - want) / scale;
        worst = std::max(worst, rel);
        if (rel > 1e-10) {
          r.pass = false;
          r.detail = "violation at d=" + std::to_string(d) + " p=" + std::to_string(p) +
                     " rel=" + fmt(rel);
          break;
        }
      }
    }
  }
  r.seconds = timer.elapsed();
  if (r.pass && r.seconds >= 30.0) {
    r.pass = false;
    r.detail = "exceeded 30 s budget";
  }
  if (r.pass)
    r.detail = "d=1..8, p=0..5, 100 pairs each; worst mass-relative error " + fmt(worst);
  return r;
}

CheckResult check_kernel_path_equivalence() {
  Timer timer;
  CheckResult r{3, "feature-map kernel equals the scalar partial sum", true, 0.0, ""};
  Philox4x32 rng(0xC3, 0);
  double worst = 0.0;
  for (int d = 1; d <= 8 && r.pass; ++d) {
    for (int order = 1; order <= 6 && r.pass; ++order) {
      const auto family = build_basis_family(d, order);
      for (int rep = 0; rep < 100; ++rep) {
        const Eigen::VectorXd q = sample_normal(rng, d);
        const Eigen::VectorXd k = sample_normal(rng, d);
        const double got = kernel_truncated<double>(q, k, family);
        double want = 0.0, term = 1.0, mass = 0.0, mass_term = 1.0;
        const double dot = q.dot(k);
        const double abs_dot = q.cwiseAbs().dot(k.cwiseAbs());
        for (int p = 0; p < order; ++p) {
          if (p > 0) {
            term *= dot / (static_cast<double>(p) * family.scale);
            mass_term *= abs_dot / (static_cast<double>(p) * family.scale);
          }
          want += term;
          mass += mass_term;
        }
        const double rel = std::abs(got - want) / std::max(1.0, mass);
        worst = std::max(worst, rel);
        if (rel > 1e-12) {
          r.pass = false;
          r.detail = "violation at d=" + std::to_string(d) + " P=" + std::to_string(order) +
                     " rel=" + fmt(rel);
          break;
        }
      }
    }
  }
  r.seconds = timer.elapsed();
  if (r.pass)
    r.detail = "d=1..8, P=1..6, 100 pairs each; worst mass-relative error " + fmt(worst);
  return r;
}

CheckResult check_oracle_convergence() {
  Timer timer;
  CheckResult r{4, "error against the softmax oracle falls with each term", true, 0.0, ""};
  bench::ExperimentConfig config;
  config.head_widths = {4, 8, 16};
  config.truncation_orders = {1, 2, 3, 4};
  config.context_length = 2048;
  config.seed = 42;
  const auto summary = bench::run_reconstruction(config, nullptr);

  std::ostringstream detail;
  for (int d : config.head_widths) {
    double prev = 1e300;
    for (int order : config.truncation_orders) {
      const bench::CellStats* cell = nullptr;
      for (const auto& c : summary.cells)
        if (c.head_width == d && c.truncation_order == order) cell = &c;
      if (!cell) {
        r.pass = false;
        r.detail = "missing cell";
        break;
      }
      if (cell->mean_log10 >= prev) {
        r.pass = false;
        r.detail = "mean log10 error not strictly decreasing at d=" + std::to_string(d) +
                   " P=" + std::to_string(order);
      }
      prev = cell->mean_log10;
      if (d == 16 && order == 4) {
        detail << "d=16 P=4 median |err| = " << fmt(cell->median_abs);
        if (cell->median_abs > 1e-2) {
          r.pass = false;
          r.detail = "median error above 1e-2 at d=16 P=4: " + fmt(cell->median_abs);
        }
      }
    }
  }
  r.seconds = timer.elapsed();
  if (r.pass && r.seconds >= 300.0) {
    r.pass = false;
    r.detail = "exceeded 5 min budget";
  }
  if (r.pass)
    r.detail = "mean log10 error strictly decreases over P=1..4 for d in {4,8,16}; " +
               detail.str();
  return r;
}

CheckResult check_scan_stream_equivalence() {
  Timer timer;
  CheckResult r{5, "chunked scan reproduces the streaming recurrence", true, 0.0, ""};
  const int d = 8;
  const std::int64_t n = 10000;
  const auto family = build_basis_family(d, 4);
  const auto tokens = bench::sample_token_batch(42, 5, n, d, d);
  const auto stream = attend_stream(tokens, family);

  double worst = 0.0;
  for (std::int64_t chunk : {std::int64_t{1}, std::int64_t{7}, std::int64_t{64},
                             std::int64_t{1024}}) {
    const auto scan = attend_scan(tokens, family, chunk);
    const double dev = (scan.outputs - stream.outputs).cwiseAbs().maxCoeff();
    worst = std::max(worst, dev);
    if (dev > 1e-10) {
      r.pass = false;
      r.detail = "chunk " + std::to_string(chunk) + " deviates by " + fmt(dev);
    }
  }
  const auto whole = attend_scan(tokens, family, n);
  if (!(whole.outputs == stream.outputs) || !(whole.denominators == stream.denominators)) {
    r.pass = false;
    r.detail = "single-chunk scan is not bitwise identical to the stream";
  }
  r.seconds = timer.elapsed();
  if (r.pass)
    r.detail = "n=10^4, chunks {1,7,64,1024}: max deviation " + fmt(worst) +
               "; chunk=n bitwise identical";
  return r;
}

CheckResult check_constant_state() {
  Timer timer;
  CheckResult r{6, "state element count is fixed through 10^6 updates", true, 0.0, ""};
  std::ostringstream detail;

  // Small configuration: a literal per-token update loop.
  {
    const auto family = build_basis_family(8, 4);
    auto state = init_state(family, 8);
    AttendWorkspace<> ws(family);
    Philox4x32 rng(0xC6, 0);
    Eigen::VectorXd k(8), v(8);
    const std::int64_t want = hidden_state_size_total(8, 8, 4);
    std::int64_t at_1k = -1;
    for (std::int64_t t = 0; t < 1000000; ++t) {
      for (int j = 0; j < 8; ++j) k[j] = rng.next_normal();
      for (int j = 0; j < 8; ++j) v[j] = rng.next_normal();
      update_state(state, k, v, family, ws);
      if (t + 1 == 1000) at_1k = state.element_count();
    }
    const std::int64_t at_1m = state.element_count();
    detail << "(8,8,4): " << at_1k << " @10^3, " << at_1m << " @10^6; ";
    if (at_1k != want || at_1m != want || state.token_count != 1000000) {
      r.pass = false;
      r.detail = "(8,8,4) element count drifted";
    }
  }

  // Large configuration: 10^3 per-token updates, then bulk blocks to 10^6.
  // The bulk path performs the identical accumulation as a GEMM per block,
  // which is what makes a million-token soak tractable on a desktop.
  if (r.pass) {
    const auto family = build_basis_family(64, 4);
    auto state = init_state(family, 64);
    AttendWorkspace<> ws(family);
    Philox4x32 rng(0xC6, 1);
    Eigen::VectorXd k(64), v(64);
    const std::int64_t want = hidden_state_size_total(64, 64, 4);
    for (std::int64_t t = 0; t < 1000; ++t) {
      for (int j = 0; j < 64; ++j) k[j] = rng.next_normal();
      for (int j = 0; j < 64; ++j) v[j] = rng.next_normal();
      update_state(state, k, v, family, ws);
    }
    const std::int64_t at_1k = state.element_count();
    constexpr std::int64_t kBlock = 8192;
    Eigen::MatrixXd keys(kBlock, 64), values(kBlock, 64);
    while (state.token_count < 1000000) {
      const std::int64_t len = std::min<std::int64_t>(kBlock, 1000000 - state.token_count);
      for (std::int64_t t = 0; t < len; ++t) {
        for (int j = 0; j < 64; ++j) keys(t, j) = rng.next_normal();
        for (int j = 0; j < 64; ++j) values(t, j) = rng.next_normal();
      }
      update_state_batch(state, keys.topRows(len), values.topRows(len), family);
    }
    const std::int64_t at_1m = state.element_count();
    detail << "(64,64,4): " << at_1k << " @10^3, " << at_1m << " @10^6 (want " << want << ")";
    if (at_1k != want || at_1m != want || want != 3113825 || state.token_count != 1000000) {
      r.pass = false;
      r.detail = "(64,64,4) element count drifted";
    }
  }

  r.seconds = timer.elapsed();
  if (r.pass) r.detail = detail.str();
  return r;
}

CheckResult check_cost_model() {
  Timer timer;
  CheckResult r{7, "closed forms equal per-degree sums; spot values hold", true, 0.0, ""};
  int disagreements = 0;
  for (int d : {1, 2, 3, 4, 5, 6, 7, 8, 16, 32, 64, 128}) {
    for (int order = 1; order <= 6; ++order) {
      std::int64_t state_sum = 0;
      for (int p = 0; p < order; ++p) state_sum += hidden_state_size_degree(d, d, p);
      if (hidden_state_size_total(d, d, order) != state_sum) ++disagreements;
      if (!(flops_per_token_total(d, d, order) ==
            Rational(flops_per_token_total_sum(d, d, order))))
        ++disagreements;
    }
  }
  if (disagreements > 0) {
    r.pass = false;
    r.detail = std::to_string(disagreements) +
               " closed-form/sum disagreements (per-degree sums are normative)";
  }
  if (r.pass && flops_per_token_total_sum(64, 64, 4) != 12738308) {
    r.pass = false;
    r.detail = "flops_per_token_total(64,64,4) != 12738308";
  }
  const auto conv = conventional_costs(1, 64, 64);
  if (r.pass && (conv.kv_cache_elements != 128 || conv.flops_per_token != 259)) {
    r.pass = false;
    r.detail = "conventional_costs(1,64,64) != (128, 259)";
  }
  if (r.pass && hidden_state_size_total(64, 64, 4) != 3113825) {
    r.pass = false;
    r.detail = "hidden_state_size_total(64,64,4) != 3113825";
  }
  r.seconds = timer.elapsed();
  if (r.pass)
    r.detail = "d in {1..8,16,32,64,128}, P=1..6 exact; spot values 12738308 / (128,259) hold";
  return r;
}

CheckResult check_scaling_shape() {
  Timer timer;
  CheckResult r{8, "per-token cost flat for the state, linear for the cache", true, 0.0, ""};
  std::ostringstream detail;

  // Accumulated-state arm at d = 8, P = 4: per-token time at 10^6 tokens of
  // context must be within 2x of the time at 10^4.
  {
    const int d = 8;
    const auto family = build_basis_family(d, 4);
    auto state = init_state(family, d);
    AttendWorkspace<> ws(family);
    Philox4x32 rng(0xC8, 0);
    constexpr std::int64_t kWindow = 256;
    Eigen::MatrixXd q(kWindow, d), k(kWindow, d), v(kWindow, d);
    Eigen::MatrixXd bk(8192, d), bv(8192, d);

    auto fill = [&](Eigen::MatrixXd& m) {
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (int j = 0; j < d; ++j) m(i, j) = rng.next_normal();
    };
    auto advance_to = [&](std::int64_t n) {
      while (state.token_count < n) {
        const std::int64_t len = std::min<std::int64_t>(8192, n - state.token_count);
        fill(bk);
        fill(bv);
        update_state_batch(state, bk.topRows(len), bv.topRows(len), family);
      }
    };
    auto measure = [&] {
      std::vector<double> times;
      for (int rep = 0; rep <= 5; ++rep) {
        fill(q);
        fill(k);
        fill(v);
        const auto start = Clock::now();
        for (std::int64_t t = 0; t < kWindow; ++t) {
          update_state(state, k.row(t).transpose(), v.row(t).transpose(), family, ws);
          volatile double sink = read_output(state, q.row(t).transpose(), family, ws,
                                             DenominatorPolicy::kFallbackUniform)
                                     .denominator;
          (void)sink;
        }
        if (rep > 0) times.push_back(seconds_since(start));
      }
      std::sort(times.begin(), times.end());
      return times[times.size() / 2] / static_cast<double>(kWindow);
    };

    advance_to(10000);
    const double t_small = measure();
    advance_to(1000000);
    const double t_large = measure();
    detail << "state arm: " << fmt(t_small * 1e6) << " us/token @10^4, " << fmt(t_large * 1e6)
           << " us/token @10^6; ";
    if (!(t_large <= 2.0 * t_small)) {
      r.pass = false;
      r.detail = "per-token time at 10^6 exceeds 2x the time at 10^4: " + fmt(t_large * 1e6) +
                 " vs " + fmt(t_small * 1e6) + " us";
    }
  }

  // Conventional arm at d = 8: per-token time against a materialized cache
  // of n tokens must scale ~linearly (log-log slope in [0.8, 1.2]).
  if (r.pass) {
    const int d = 8;
    const double scale = std::sqrt(static_cast<double>(d));
    Philox4x32 rng(0xC8, 1);
    std::vector<double> log_n, log_t;
    for (std::int64_t n : {std::int64_t{1000}, std::int64_t{3162}, std::int64_t{10000},
                           std::int64_t{31623}, std::int64_t{100000}}) {
      Eigen::MatrixXd keys(n, d), values(n, d);
      for (std::int64_t t = 0; t < n; ++t)
        for (int j = 0; j < d; ++j) {
          keys(t, j) = rng.next_normal();
          values(t, j) = rng.next_normal();
        }
      constexpr std::int64_t kWindow = 16;
      Eigen::MatrixXd probes(kWindow, d);
      std::vector<double> times;
      for (int rep = 0; rep <= 7; ++rep) {
        for (Eigen::Index i = 0; i < probes.rows(); ++i)
          for (int j = 0; j < d; ++j) probes(i, j) = rng.next_normal();
        const auto start = Clock::now();
        for (std::int64_t t = 0; t < kWindow; ++t) {
          volatile double sink =
              softmax_attend_one(probes.row(t).transpose(), keys, values, scale).sum();
          (void)sink;
        }
        if (rep > 0) times.push_back(seconds_since(start));
      }
      std::sort(times.begin(), times.end());
      const double per_token = times[times.size() / 2] / static_cast<double>(kWindow);
      log_n.push_back(std::log(static_cast<double>(n)));
      log_t.push_back(std::log(per_token));
    }
    // Least-squares slope of log t against log n.
    const auto m = static_cast<double>(log_n.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < log_n.size(); ++i) {
      sx += log_n[i];
      sy += log_t[i];
      sxx += log_n[i] * log_n[i];
      sxy += log_n[i] * log_t[i];
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    detail << "conventional log-log slope " << fmt(slope);
    if (slope < 0.8 || slope > 1.2) {
      r.pass = false;
      r.detail = "conventional per-token slope " + fmt(slope) + " outside [0.8, 1.2]";
    }
  }

  r.seconds = timer.elapsed();
  if (r.pass && r.seconds >= 900.0) {
    r.pass = false;
    r.detail = "exceeded 15 min budget";
  }
  if (r.pass) r.detail = detail.str();
  return r;
}

CheckResult check_selftest_command(const std::string& cli_path) {
  Timer timer;
  CheckResult r{9, "selftest command passes end to end in under 5 minutes", false, 0.0, ""};
  if (cli_path.empty()) {
    r.detail = "no CLI path provided";
    return r;
  }
  const std::string command = "\"" + cli_path + "\" selftest";
  const int status = std::system(command.c_str());
  r.seconds = timer.elapsed();
  const bool exited_zero = status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;
  r.pass = exited_zero && r.seconds < 300.0;
  if (!exited_zero)
    r.detail = "selftest exited with status " + std::to_string(status);
  else if (r.seconds >= 300.0)
    r.detail = "selftest took " + fmt(r.seconds) + " s, over the 5 min budget";
  else
    r.detail = "exit 0 in " + fmt(r.seconds) + " s";
  return r;
}

std::vector<CheckResult> run_selftest() {
  std::vector<CheckResult> results;
  results.push_back(check_basis_counts());
  results.push_back(check_polynomial_identity());
  results.push_back(check_kernel_path_equivalence());
  results.push_back(check_scan_stream_equivalence());
  results.push_back(check_constant_state());
  results.push_back(check_cost_model());
  return results;
}

bool report(const std::vector<CheckResult>& results) {
  bool all = true;
  for (const auto& r : results) {
    std::printf("[%s] criterion %d: %s (%.2f s) %s\n", r.pass ? "PASS" : "FAIL", r.id,
                r.name.c_str(), r.seconds, r.detail.c_str());
    all &= r.pass;
  }
  std::fflush(stdout);
  return all;
}

}  // namespace tattn::selfcheck
