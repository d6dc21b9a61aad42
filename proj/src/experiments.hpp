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

#ifndef TATTN_BENCH_EXPERIMENTS_HPP
#define TATTN_BENCH_EXPERIMENTS_HPP

#include "tattn/attention.hpp"
#include "tattn/tokens.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tattn::bench {

enum class PrecisionMode { kDouble, kSingle };

const char* precision_name(PrecisionMode mode);

/// One experiment description, shared by every subcommand. Cells are the
/// cross product of head_widths and truncation_orders.
struct ExperimentConfig {
  std::vector<int> head_widths = {4, 8, 16, 32};
  std::vector<int> truncation_orders = {1, 2, 3, 4};
  std::int64_t context_length = 2048;
  std::uint64_t seed = 42;
  PrecisionMode precision = PrecisionMode::kDouble;
  std::int64_t chunk_size = 0;  // 0 = streaming recurrence, >0 = chunked scan
  int workers = 2;
  bool degree0_fallback = false;  // robustness mode for degenerate denominators

  // perf sweep
  std::vector<std::int64_t> perf_context_lengths = {1000, 10000, 100000, 1000000};
  std::int64_t conventional_max_context = 100000;
  int repetitions = 5;

  // cost tables
  std::vector<std::int64_t> cost_context_lengths = {1000, 100000, 1000000};
  std::vector<int> head_counts = {1};
};

/// Error statistics of one (d, P) cell. Log statistics are over
/// log10(max(|err|, 1e-16)) across every output element of every measured
/// token; degenerate tokens are excluded and counted.
struct CellStats {
  int head_width = 0;
  int truncation_order = 0;
  std::int64_t tokens = 0;
  std::int64_t measured = 0;
  std::int64_t degenerate = 0;
  double mean_log10 = 0.0;
  double median_log10 = 0.0;
  double max_log10 = 0.0;
  double median_abs = 0.0;
  double max_abs = 0.0;
};

/// Same statistics bucketed by token position (power-of-two buckets).
struct PositionBucketStats {
  int head_width = 0;
  int truncation_order = 0;
  std::int64_t position_lo = 0;  // 1-based, inclusive
  std::int64_t position_hi = 0;
  std::int64_t count = 0;
  std::int64_t degenerate = 0;
  double mean_log10 = 0.0;
  double median_log10 = 0.0;
  double max_log10 = 0.0;
};

struct ErrorSummary {
  std::vector<CellStats> cells;
  std::vector<PositionBucketStats> buckets;
};

/// Standard-normal q, k, v per token from the Philox stream keyed by
/// (seed, stream). Reconstruction runs key the stream by the head width, so
/// every truncation order of one width sees the same tokens.
TokenBatch sample_token_batch(std::uint64_t seed, std::uint64_t stream, std::int64_t n, int d_k,
                              int d_v);

/// Reconstruction error against the double-precision softmax oracle over
/// the (d, P) grid. Writes one CSV row per cell when csv is non-null.
ErrorSummary run_reconstruction(const ExperimentConfig& config, std::ostream* csv);

/// Same protocol over caller-provided tokens (one width, grid over P).
ErrorSummary run_reconstruction_on(const TokenBatch& tokens, const ExperimentConfig& config,
                                   std::ostream* csv);

/// Reconstruction error bucketed by token position.
ErrorSummary run_error_by_position(const ExperimentConfig& config, std::ostream* csv);

/// Per-token wall time and resident state bytes for both formulations over
/// a context-length sweep. Timing columns are marked nondeterministic.
void run_perf(const ExperimentConfig& config, std::ostream& csv);

/// Closed-form cost table over the (d, P, n, heads) grid, plus the Taylor
/// coefficient table against reduced-precision resolutions when alpha_csv
/// is non-null.
void emit_cost_tables(const ExperimentConfig& config, std::ostream& csv, std::ostream* alpha_csv);

}  // namespace tattn::bench

#endif  // TATTN_BENCH_EXPERIMENTS_HPP
