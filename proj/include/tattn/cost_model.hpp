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

#ifndef TATTN_COST_MODEL_HPP
#define TATTN_COST_MODEL_HPP

#include "tattn/combinatorics.hpp"
#include "tattn/errors.hpp"

#include <cstdint>
#include <numeric>
#include <string>

namespace tattn {

// Closed-form size and FLOP accounting for the accumulated-state
// formulation and for conventional softmax attention. Everything here is
// exact integer or rational arithmetic; floating point appears only when a
// report is rendered.
//
// The per-degree sums are normative; the closed forms are redundant
// cross-checks (they agree exactly on every valid input, which the tests
// assert under exact arithmetic).

/// Exact rational with 64-bit numerator and denominator, always normalized
/// with a positive denominator.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n) : num(n), den(1) {}  // NOLINT(google-explicit-constructor)
  Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den == 0) throw domain_error("Rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  bool is_integer() const { return den == 1; }
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string to_string() const {
    return is_integer() ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return {checked_add(checked_mul(a.num, b.den), checked_mul(b.num, a.den)),
            checked_mul(a.den, b.den)};
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return {checked_mul(a.num, b.num), checked_mul(a.den, b.den)};
  }
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num == b.num && a.den == b.den;
  }
};

namespace detail {

inline void require_widths(std::int64_t d_k, std::int64_t d_v) {
  if (d_k < 1 || d_v < 1) throw domain_error("cost model: widths must be >= 1");
}

}  // namespace detail

/// Accumulator elements contributed by one degree: (d_V + 1) C(d_K + p - 1, p).
inline std::int64_t hidden_state_size_degree(std::int64_t d_k, std::int64_t d_v, std::int64_t p) {
  detail::require_widths(d_k, d_v);
  if (p < 0) throw domain_error("hidden_state_size_degree: p must be >= 0");
  return checked_mul(d_v + 1, binomial(d_k + p - 1, p));
}

/// Accumulator elements over all degrees 0..P-1: (d_V + 1) C(d_K + P - 1, P - 1).
inline std::int64_t hidden_state_size_total(std::int64_t d_k, std::int64_t d_v, std::int64_t order) {
  detail::require_widths(d_k, d_v);
  if (order < 1) throw domain_error("hidden_state_size_total: order must be >= 1");
  return checked_mul(d_v + 1, binomial(d_k + order - 1, order - 1));
}

/// Forward-pass multiply/add count for one degree: (4 d_V + 2p + 4) C(d_K + p - 1, p).
inline std::int64_t flops_per_token_degree(std::int64_t d_k, std::int64_t d_v, std::int64_t p) {
  detail::require_widths(d_k, d_v);
  if (p < 0) throw domain_error("flops_per_token_degree: p must be >= 0");
  return checked_mul(4 * d_v + 2 * p + 4, binomial(d_k + p - 1, p));
}

/// Per-degree sum over 0..P-1 — the normative total.
inline std::int64_t flops_per_token_total_sum(std::int64_t d_k, std::int64_t d_v,
                                              std::int64_t order) {
  detail::require_widths(d_k, d_v);
  if (order < 1) throw domain_error("flops_per_token_total_sum: order must be >= 1");
  std::int64_t total = 0;
  for (std::int64_t p = 0; p < order; ++p)
    total = checked_add(total, flops_per_token_degree(d_k, d_v, p));
  return total;
}

/// Closed form (4 d_V + 2(P d_K + 1)/(d_K + 1) + 2) C(d_K + P - 1, P - 1),
/// kept exact. Cross-check only; equals the per-degree sum on every valid
/// input.
inline Rational flops_per_token_total(std::int64_t d_k, std::int64_t d_v, std::int64_t order) {
  detail::require_widths(d_k, d_v);
  if (order < 1) throw domain_error("flops_per_token_total: order must be >= 1");
  const Rational bracket = Rational(4 * d_v + 2) + Rational(2 * (order * d_k + 1), d_k + 1);
  return bracket * Rational(binomial(d_k + order - 1, order - 1));
}

struct ConventionalCosts {
  std::int64_t kv_cache_elements = 0;
  std::int64_t flops_per_token = 0;
};

/// KV cache n (d_K + d_V); per-token FLOPs n (2 d_K + 2 d_V + 3): the logit
/// row, a 3-op softmax per score, and the value contraction, for one query
/// and one head.
inline ConventionalCosts conventional_costs(std::int64_t n, std::int64_t d_k, std::int64_t d_v) {
  detail::require_widths(d_k, d_v);
  if (n < 1) throw domain_error("conventional_costs: n must be >= 1");
  return {checked_mul(n, d_k + d_v), checked_mul(n, 2 * d_k + 2 * d_v + 3)};
}

/// d_K^p, the unpacked monomial count a permutation-blind feature map would
/// carry for one degree.
inline std::int64_t naive_feature_count(std::int64_t d_k, std::int64_t p) {
  if (d_k < 1) throw domain_error("naive_feature_count: d_k must be >= 1");
  if (p < 0) throw domain_error("naive_feature_count: p must be >= 0");
  return ipow(d_k, p);
}

/// Total naive features over degrees 0..P-1.
inline std::int64_t naive_feature_count_total(std::int64_t d_k, std::int64_t order) {
  if (order < 1) throw domain_error("naive_feature_count_total: order must be >= 1");
  std::int64_t total = 0;
  for (std::int64_t p = 0; p < order; ++p)
    total = checked_add(total, naive_feature_count(d_k, p));
  return total;
}

/// Smallest context length whose KV cache outgrows the fixed state.
inline std::int64_t crossover_context_length(std::int64_t d_k, std::int64_t d_v,
                                             std::int64_t order) {
  const std::int64_t state = hidden_state_size_total(d_k, d_v, order);
  return state / (d_k + d_v) + 1;
}

/// Multiply/add and divide census of what update_state + read_output
/// actually execute per token, mirroring the implementation kernels:
/// per degree, the update runs m(p-1) product steps, m weight multiplies,
/// m adds into z, and 2 m d_V for the rank-1 update; the readout runs
/// m(p-1) product steps, 2m for the denominator dot, and 2 m d_V for the
/// numerator. Cross-degree aggregation and the final division are counted
/// separately.
struct FlopCensus {
  std::int64_t mul_add = 0;
  std::int64_t divides = 0;
};

inline FlopCensus census_update_read(std::int64_t d_k, std::int64_t d_v, std::int64_t order) {
  detail::require_widths(d_k, d_v);
  if (order < 1) throw domain_error("census_update_read: order must be >= 1");
  FlopCensus census;
  for (std::int64_t p = 0; p < order; ++p) {
    const std::int64_t m = binomial(d_k + p - 1, p);
    const std::int64_t update = checked_mul(m, p + 1) + checked_mul(2 * m, d_v);
    const std::int64_t read = checked_mul(m, p + 1) + checked_mul(2 * m, d_v);
    census.mul_add = checked_add(census.mul_add, checked_add(update, read));
  }
  census.mul_add = checked_add(census.mul_add, checked_mul(order - 1, d_v + 1));
  census.divides = d_v;
  return census;
}

/// One row of the cost table. Head widths are per head; totals scale by the
/// head count. `naive_feature_elements` is the all-degree naive total, the
/// packed counterpart of `hidden_state_elements`.
struct CostReport {
  std::int64_t d_k = 0;
  std::int64_t d_v = 0;
  std::int64_t truncation_order = 0;
  std::int64_t context_length = 0;
  std::int64_t heads = 1;
  std::int64_t hidden_state_elements = 0;
  Rational flops_per_token;
  std::int64_t kv_cache_elements = 0;
  std::int64_t conventional_flops_per_token = 0;
  std::int64_t naive_feature_elements = 0;
  std::int64_t crossover_n = 0;
};

inline CostReport build_cost_report(std::int64_t d_k, std::int64_t d_v, std::int64_t order,
                                    std::int64_t n, std::int64_t heads = 1) {
  if (heads < 1) throw domain_error("build_cost_report: heads must be >= 1");
  CostReport r;
  r.d_k = d_k;
  r.d_v = d_v;
  r.truncation_order = order;
  r.context_length = n;
  r.heads = heads;
  r.hidden_state_elements = checked_mul(heads, hidden_state_size_total(d_k, d_v, order));
  r.flops_per_token = Rational(heads) * Rational(flops_per_token_total_sum(d_k, d_v, order));
  const auto conv = conventional_costs(n, d_k, d_v);
  r.kv_cache_elements = checked_mul(heads, conv.kv_cache_elements);
  r.conventional_flops_per_token = checked_mul(heads, conv.flops_per_token);
  r.naive_feature_elements = checked_mul(heads, naive_feature_count_total(d_k, order));
  r.crossover_n = crossover_context_length(d_k, d_v, order);
  return r;
}

}  // namespace tattn

#endif  // TATTN_COST_MODEL_HPP
