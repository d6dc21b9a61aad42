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
#include "selfcheck.hpp"
#include "tattn/basis.hpp"
#include "tattn/token_stream.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitBadConfig = 2;

/// Opens the --out target, or stdout when none was given.
struct OutputTarget {
  std::ofstream file;
  std::ostream* stream = &std::cout;

  explicit OutputTarget(const std::string& path) {
    if (!path.empty()) {
      file.open(path, std::ios::binary);
      if (!file) throw tattn::domain_error("cannot open output path: " + path);
      stream = &file;
    }
  }
};

tattn::bench::PrecisionMode parse_precision(const std::string& name) {
  if (name == "double") return tattn::bench::PrecisionMode::kDouble;
  if (name == "single") return tattn::bench::PrecisionMode::kSingle;
  throw tattn::domain_error("precision must be 'double' or 'single'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constant-cost causal attention via packed polynomial features"};
  app.require_subcommand(1);

  std::vector<int> d_list = {4, 8, 16, 32};
  std::vector<int> p_list = {1, 2, 3, 4};
  std::vector<std::int64_t> n_list;
  std::vector<int> heads_list = {1};
  std::int64_t n_single = 2048;
  std::uint64_t seed = 42;
  std::int64_t chunk = 0;
  std::string precision = "double";
  std::string out_path;
  std::string format = "csv";
  std::string alpha_out;
  std::string tokens_in, tokens_out;
  bool deg0_fallback = false;
  int workers = 2;
  int reps = 5;
  std::int64_t conv_cap = 100000;

  auto add_common = [&](CLI::App* cmd, bool wants_n_single) {
    cmd->add_option("--d", d_list, "head widths d = d_K = d_V");
    cmd->add_option("--p-max", p_list, "Taylor truncation orders P");
    if (wants_n_single) cmd->add_option("--n", n_single, "context length");
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--chunk", chunk, "scan chunk size (0 = streaming)");
    cmd->add_option("--precision", precision, "double | single");
    cmd->add_option("--out", out_path, "output path (default stdout)");
    cmd->add_option("--format", format, "output format (csv)");
    cmd->add_option("--workers", workers, "worker pool size for experiment cells");
  };

  auto* basis_cmd = app.add_subcommand("basis", "export index matrices and multiplicities");
  int basis_d = 4;
  int basis_p = 4;
  double basis_scale = 0.0;  // 0 = sqrt(d)
  basis_cmd->add_option("--d", basis_d, "key width d_K");
  basis_cmd->add_option("--p-max", basis_p, "number of Taylor terms P");
  basis_cmd->add_option("--scale", basis_scale, "kernel scale c (default sqrt(d))");
  basis_cmd->add_option("--out", out_path, "output path (default stdout)");
  basis_cmd->add_option("--format", format, "output format (csv)");

  auto* recon_cmd = app.add_subcommand("recon", "reconstruction error against the softmax oracle");
  add_common(recon_cmd, true);
  recon_cmd->add_flag("--deg0-fallback", deg0_fallback,
                      "average uniformly instead of flagging degenerate denominators");
  recon_cmd->add_option("--tokens-in", tokens_in, "read tokens from a SATA stream file");
  recon_cmd->add_option("--tokens-out", tokens_out, "also write the sampled tokens to this file");

  auto* bypos_cmd = app.add_subcommand("recon-by-pos", "reconstruction error by token position");
  add_common(bypos_cmd, true);
  bypos_cmd->add_flag("--deg0-fallback", deg0_fallback,
                      "average uniformly instead of flagging degenerate denominators");

  auto* perf_cmd = app.add_subcommand("perf", "per-token time and state bytes vs context length");
  add_common(perf_cmd, false);
  perf_cmd->add_option("--n", n_list, "context lengths to measure");
  perf_cmd->add_option("--reps", reps, "timed repetitions per measurement");
  perf_cmd->add_option("--conv-cap", conv_cap, "largest context for the conventional arm");

  auto* cost_cmd = app.add_subcommand("cost", "closed-form cost tables");
  cost_cmd->add_option("--d", d_list, "per-head widths");
  cost_cmd->add_option("--p-max", p_list, "Taylor truncation orders P");
  cost_cmd->add_option("--n", n_list, "context lengths");
  cost_cmd->add_option("--heads", heads_list, "head counts");
  cost_cmd->add_option("--out", out_path, "output path (default stdout)");
  cost_cmd->add_option("--alpha-out", alpha_out, "also write the Taylor coefficient table here");
  cost_cmd->add_option("--format", format, "output format (csv)");

  auto* selftest_cmd = app.add_subcommand("selftest", "run the full invariant suite at desk scale");
  (void)selftest_cmd;

  CLI11_PARSE(app, argc, argv);

  try {
    if (format != "csv") throw tattn::domain_error("unsupported format: " + format);

    if (basis_cmd->parsed()) {
      OutputTarget out(out_path);
      const auto family = basis_scale > 0.0
                              ? tattn::build_basis_family(basis_d, basis_p, basis_scale)
                              : tattn::build_basis_family(basis_d, basis_p);
      tattn::write_basis_csv(*out.stream, family);
      return kExitOk;
    }

    tattn::bench::ExperimentConfig config;
    config.head_widths = d_list;
    config.truncation_orders = p_list;
    config.context_length = n_single;
    config.seed = seed;
    config.chunk_size = chunk;
    config.precision = parse_precision(precision);
    config.workers = workers;
    config.degree0_fallback = deg0_fallback;
    config.repetitions = reps;
    config.conventional_max_context = conv_cap;
    if (!n_list.empty()) {
      config.perf_context_lengths = n_list;
      config.cost_context_lengths = n_list;
    }
    config.head_counts = heads_list;

    if (recon_cmd->parsed()) {
      if (!tokens_in.empty() || !tokens_out.empty()) {
        // Token files pin d to the file's widths; the grid then runs over P.
        tattn::TokenBatch tokens;
        if (!tokens_in.empty()) {
          std::ifstream is(tokens_in, std::ios::binary);
          if (!is) throw tattn::domain_error("cannot open tokens file: " + tokens_in);
          tokens = tattn::read_token_stream(is);
          config.head_widths = {tokens.key_width()};
          config.context_length = tokens.size();
        } else {
          tokens = tattn::bench::sample_token_batch(
              seed, static_cast<std::uint64_t>(d_list.front()), n_single, d_list.front(),
              d_list.front());
          config.head_widths = {d_list.front()};
        }
        if (!tokens_out.empty()) {
          std::ofstream os(tokens_out, std::ios::binary);
          if (!os) throw tattn::domain_error("cannot open tokens file: " + tokens_out);
          tattn::write_token_stream(os, tokens);
        }
        if (!tokens_in.empty()) {
          // Round-trip through the stream format so file-fed and sampled
          // runs share one code path.
          OutputTarget out(out_path);
          tattn::bench::run_reconstruction_on(tokens, config, out.stream);
          return kExitOk;
        }
      }
      OutputTarget out(out_path);
      tattn::bench::run_reconstruction(config, out.stream);
      return kExitOk;
    }

    if (bypos_cmd->parsed()) {
      OutputTarget out(out_path);
      tattn::bench::run_error_by_position(config, out.stream);
      return kExitOk;
    }

    if (perf_cmd->parsed()) {
      OutputTarget out(out_path);
      tattn::bench::run_perf(config, *out.stream);
      return kExitOk;
    }

    if (cost_cmd->parsed()) {
      OutputTarget out(out_path);
      if (!alpha_out.empty()) {
        std::ofstream alpha(alpha_out, std::ios::binary);
        if (!alpha) throw tattn::domain_error("cannot open output path: " + alpha_out);
        tattn::bench::emit_cost_tables(config, *out.stream, &alpha);
      } else {
        tattn::bench::emit_cost_tables(config, *out.stream, nullptr);
      }
      return kExitOk;
    }

    if (selftest_cmd->parsed()) {
      const bool ok = tattn::selfcheck::report(tattn::selfcheck::run_selftest());
      return ok ? kExitOk : kExitCheckFailed;
    }
  } catch (const tattn::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadConfig;
  } catch (const tattn::budget_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  return kExitBadConfig;
}
