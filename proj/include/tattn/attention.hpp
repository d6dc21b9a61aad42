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

#ifndef TATTN_ATTENTION_HPP
#define TATTN_ATTENTION_HPP

#include "tattn/basis.hpp"
#include "tattn/feature_map.hpp"
#include "tattn/tokens.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <type_traits>
#include <vector>

namespace tattn {

// Causal attention through per-degree accumulated states.
//
// For each degree p the state holds
//   z_p = sum_t alpha_p C_p phi_p(k_t)            (length m_p)
//   s_p = sum_t v_t (alpha_p C_p phi_p(k_t))^T    (d_V x m_p)
// with alpha_p and the diagonal weights C_p folded into the key features at
// accumulation time, so the readout at a query is a plain dot product:
//   denominator = sum_p phi_p(q) . z_p
//   numerator   = sum_p s_p^T phi_p(q)
//   output      = numerator / denominator.
//
// The state size is (d_V + 1) C(d_K + P - 1, P - 1) elements regardless of
// how many tokens have been absorbed. State addition is associative, which
// is what makes chunked evaluation (attend_scan) possible.
//
// Accumulators are always double, whatever precision the feature products
// are evaluated in; long-horizon accumulation error stays bounded and the
// reduced-precision mode remains an input-precision experiment only.

/// What to do when the truncated-kernel denominator trips the guard.
enum class DenominatorPolicy {
  kRaise,            ///< throw degenerate_denominator_error (default)
  kFallbackUniform,  ///< fall back to the degree-0 output, the running value mean
  kFlagNan,          ///< emit NaN for this token and keep streaming
};

/// Guard scale: a denominator is degenerate when |Z| < guard * (1 + T).
inline constexpr double kDenominatorGuard = 1e-12;

/// Fixed-size accumulated attention state.
struct AttentionState {
  std::vector<Eigen::VectorXd> z;  // per degree, length m_p
  std::vector<Eigen::MatrixXd> s;  // per degree, d_V x m_p
  std::int64_t token_count = 0;

  /// Measured element count, summed over the actual accumulator extents.
  std::int64_t element_count() const {
    std::int64_t n = 0;
    for (const auto& v : z) n += v.size();
    for (const auto& m : s) n += m.size();
    return n;
  }

  int value_width() const { return s.empty() ? 0 : static_cast<int>(s[0].rows()); }

  void set_zero() {
    for (auto& v : z) v.setZero();
    for (auto& m : s) m.setZero();
    token_count = 0;
  }
};

/// One readout: y = numerator / denominator.
struct AttentionOutput {
  Eigen::VectorXd output;
  double denominator = 0.0;
  Eigen::VectorXd numerator;
};

/// A full sequence of readouts. Tokens whose denominator tripped the guard
/// under DenominatorPolicy::kFlagNan are listed in `degenerate_tokens` and
/// carry NaN rows.
struct AttendResult {
  Eigen::MatrixXd outputs;      // n x d_V
  Eigen::VectorXd denominators; // n
  std::vector<std::int64_t> degenerate_tokens;
};

/// Reusable per-degree scratch. Feature buffers are double; `cast` holds the
/// reduced-precision copy of the current input when Scalar is not double.
template <typename Scalar = double>
struct AttendWorkspace {
  std::vector<Eigen::VectorXd> key_feat;
  std::vector<Eigen::VectorXd> query_feat;
  VecX<Scalar> cast;

  explicit AttendWorkspace(const BasisFamily& family) {
    key_feat.reserve(family.degree_bases.size());
    query_feat.reserve(family.degree_bases.size());
    for (const auto& b : family.degree_bases) {
      key_feat.emplace_back(b.basis_size());
      query_feat.emplace_back(b.basis_size());
    }
  }
};

namespace detail {

template <typename Scalar>
const VecX<Scalar>& as_scalar(const Eigen::VectorXd& x, VecX<Scalar>& scratch) {
  if constexpr (std::is_same_v<Scalar, double>) {
    return x;
  } else {
    scratch = x.template cast<Scalar>();
    return scratch;
  }
}

}  // namespace detail

/// Zeroed state sized for the family and value width, subject to the element
/// budget.
inline AttentionState init_state(const BasisFamily& family, int value_width,
                                 std::int64_t element_budget = kDefaultElementBudget) {
  if (value_width < 1) throw domain_error("init_state: value_width must be >= 1");
  const std::int64_t elements =
      checked_mul(static_cast<std::int64_t>(value_width) + 1, family.feature_count());
  if (elements > element_budget) throw budget_error(elements, element_budget);

  AttentionState state;
  state.z.reserve(family.degree_bases.size());
  state.s.reserve(family.degree_bases.size());
  for (const auto& b : family.degree_bases) {
    state.z.emplace_back(Eigen::VectorXd::Zero(b.basis_size()));
    state.s.emplace_back(Eigen::MatrixXd::Zero(value_width, b.basis_size()));
  }
  return state;
}

/// Absorbs one (key, value) pair: z_p += alpha_p C_p phi_p(k), then
/// s_p += (alpha_p C_p phi_p(k)) v^T, for every degree.
template <typename Scalar = double>
void update_state(AttentionState& state, const Eigen::VectorXd& key, const Eigen::VectorXd& value,
                  const BasisFamily& family, AttendWorkspace<Scalar>& ws) {
  if (key.size() != family.key_width) throw domain_error("update_state: key width mismatch");
  if (value.size() != state.value_width()) throw domain_error("update_state: value width mismatch");

  const VecX<Scalar>& k = detail::as_scalar<Scalar>(key, ws.cast);
  for (std::size_t p = 0; p < family.degree_bases.size(); ++p) {
    const auto& basis = family.degree_bases[p];
    Eigen::VectorXd& w = ws.key_feat[p];
    detail::phi_weighted_into<Scalar, double>(
        k, basis, static_cast<Scalar>(family.taylor_coefficients[static_cast<Eigen::Index>(p)]),
        w.data());
    state.z[p] += w;
    state.s[p].noalias() += value * w.transpose();
  }
  ++state.token_count;
}

template <typename Scalar = double>
void update_state(AttentionState& state, const Eigen::VectorXd& key, const Eigen::VectorXd& value,
                  const BasisFamily& family) {
  AttendWorkspace<Scalar> ws(family);
  update_state<Scalar>(state, key, value, family, ws);
}

/// Absorbs a block of (key, value) pairs at once. Equivalent to a loop of
/// update_state calls up to summation order: every token's weighted key
/// features enter z_p and s_p, but the per-degree work becomes a
/// feature-matrix build plus one GEMM per block, so the accumulators are
/// traversed once per block instead of once per token. The feature build is
/// token-major — one basis monomial at a time across the whole block, as a
/// product of contiguous key columns — which is the same per-row gathered
/// product, vectorized across tokens.
template <typename Scalar = double>
void update_state_batch(AttentionState& state, const Eigen::Ref<const Eigen::MatrixXd>& keys,
                        const Eigen::Ref<const Eigen::MatrixXd>& values, const BasisFamily& family,
                        std::int64_t scratch_limit_bytes = std::int64_t{64} << 20) {
  if (keys.cols() != family.key_width) throw domain_error("update_state_batch: key width mismatch");
  if (values.cols() != state.value_width())
    throw domain_error("update_state_batch: value width mismatch");
  if (keys.rows() != values.rows()) throw domain_error("update_state_batch: token count mismatch");

  std::int64_t max_m = 1;
  for (const auto& b : family.degree_bases) max_m = std::max(max_m, b.basis_size());
  const std::int64_t block = std::clamp<std::int64_t>(
      scratch_limit_bytes / (max_m * static_cast<std::int64_t>(sizeof(double))), 8, 128);

  Eigen::MatrixXd feat(block, max_m);  // transposed: one column per basis row
  MatX<Scalar> keys_cast;
  VecX<Scalar> col_cast;
  std::vector<Eigen::VectorXd> weights;  // alpha_p C_p as doubles, built once
  weights.reserve(family.degree_bases.size());
  for (std::size_t p = 0; p < family.degree_bases.size(); ++p)
    weights.emplace_back(family.taylor_coefficients[static_cast<Eigen::Index>(p)] *
                         family.degree_bases[p].multiplicities.cast<double>());

  const std::int64_t n = keys.rows();
  for (std::int64_t begin = 0; begin < n; begin += block) {
    const std::int64_t len = std::min(block, n - begin);
    const auto key_block = keys.middleRows(begin, len);
    if constexpr (!std::is_same_v<Scalar, double>) {
      keys_cast = key_block.template cast<Scalar>();
      col_cast.resize(len);
    }
    for (std::size_t p = 0; p < family.degree_bases.size(); ++p) {
      const auto& basis = family.degree_bases[p];
      const auto& index = basis.index_matrix;
      const std::int64_t m = basis.basis_size();
      const int degree = basis.degree;
      auto w = feat.topLeftCorner(len, m);
      Eigen::VectorXd& zp = state.z[p];
      // One fused pass per basis monomial across the whole block, summing
      // into z while the column is still cache-hot. The low arities are
      // spelled out so each column is a single vectorized sweep.
      auto fill = [&](const auto& cols) {
        for (std::int64_t i = 0; i < m; ++i) {
          const auto wt = static_cast<Scalar>(weights[p][i]);
          auto col = [&](int j) { return cols(index(i, j) - 1).array(); };
          auto out = [&](const auto& expr) {
            if constexpr (std::is_same_v<Scalar, double>) {
              w.col(i).array() = expr;
            } else {
              col_cast.array() = expr;
              w.col(i) = col_cast.template cast<double>();
            }
          };
          switch (degree) {
            case 0: w.col(i).setConstant(weights[p][i]); break;
            case 1: out(wt * col(0)); break;
            case 2: out(wt * col(0) * col(1)); break;
            case 3: out(wt * col(0) * col(1) * col(2)); break;
            case 4: out(wt * col(0) * col(1) * col(2) * col(3)); break;
            case 5: out(wt * col(0) * col(1) * col(2) * col(3) * col(4)); break;
            default: {
              col_cast = (wt * col(0) * col(1) * col(2) * col(3) * col(4)).matrix();
              for (int j = 5; j < degree; ++j) col_cast.array() *= col(j);
              if constexpr (std::is_same_v<Scalar, double>)
                w.col(i) = col_cast;
              else
                w.col(i) = col_cast.template cast<double>();
              break;
            }
          }
          zp[i] += w.col(i).sum();
        }
      };
      if constexpr (std::is_same_v<Scalar, double>) {
        fill([&](int c) { return key_block.col(c); });
      } else {
        fill([&](int c) { return keys_cast.col(c); });
      }
      state.s[p].noalias() += values.middleRows(begin, len).transpose() * w;
    }
    state.token_count += len;
  }
}

/// Elementwise state addition, the associative combine of the scan.
inline void combine_into(AttentionState& dst, const AttentionState& src) {
  if (dst.z.size() != src.z.size() || dst.value_width() != src.value_width())
    throw domain_error("combine_into: state shapes differ");
  for (std::size_t p = 0; p < dst.z.size(); ++p) {
    dst.z[p] += src.z[p];
    dst.s[p] += src.s[p];
  }
  dst.token_count += src.token_count;
}

inline AttentionState combine_states(const AttentionState& a, const AttentionState& b) {
  AttentionState out = a;
  combine_into(out, b);
  return out;
}

namespace detail {

/// Readout against the sum of several state parts without materializing the
/// sum. Parts with no tokens contribute nothing and are skipped, so a
/// single-part readout performs exactly the same arithmetic as a readout of
/// that part alone.
template <typename Scalar>
AttentionOutput read_parts(const AttentionState* const* parts, std::size_t n_parts,
                           const Eigen::VectorXd& query, const BasisFamily& family,
                           AttendWorkspace<Scalar>& ws, DenominatorPolicy policy) {
  if (query.size() != family.key_width) throw domain_error("read_output: query width mismatch");
  std::int64_t tokens = 0;
  for (std::size_t i = 0; i < n_parts; ++i) tokens += parts[i]->token_count;
  if (tokens == 0) throw empty_context_error();

  const int d_v = parts[0]->value_width();
  const VecX<Scalar>& q = detail::as_scalar<Scalar>(query, ws.cast);

  AttentionOutput out;
  out.numerator = Eigen::VectorXd::Zero(d_v);
  out.denominator = 0.0;
  for (std::size_t p = 0; p < family.degree_bases.size(); ++p) {
    const auto& basis = family.degree_bases[p];
    Eigen::VectorXd& fq = ws.query_feat[p];
    detail::phi_into<Scalar, double>(q, basis, fq.data());
    for (std::size_t i = 0; i < n_parts; ++i) {
      if (parts[i]->token_count == 0) continue;
      out.denominator += fq.dot(parts[i]->z[p]);
      out.numerator.noalias() += parts[i]->s[p] * fq;
    }
  }

  if (std::abs(out.denominator) <
      kDenominatorGuard * (1.0 + static_cast<double>(tokens))) {
    switch (policy) {
      case DenominatorPolicy::kRaise:
        throw degenerate_denominator_error(out.denominator, out.numerator, tokens);
      case DenominatorPolicy::kFallbackUniform: {
        double z0 = 0.0;
        Eigen::VectorXd s0 = Eigen::VectorXd::Zero(d_v);
        for (std::size_t i = 0; i < n_parts; ++i) {
          if (parts[i]->token_count == 0) continue;
          z0 += parts[i]->z[0][0];
          s0 += parts[i]->s[0].col(0);
        }
        out.output = s0 / z0;
        return out;
      }
      case DenominatorPolicy::kFlagNan:
        out.output = Eigen::VectorXd::Constant(d_v, std::numeric_limits<double>::quiet_NaN());
        return out;
    }
  }
  out.output = out.numerator / out.denominator;
  return out;
}

}  // namespace detail

/// Readout of the accumulated state at one query.
template <typename Scalar = double>
AttentionOutput read_output(const AttentionState& state, const Eigen::VectorXd& query,
                            const BasisFamily& family, AttendWorkspace<Scalar>& ws,
                            DenominatorPolicy policy = DenominatorPolicy::kRaise) {
  const AttentionState* parts[1] = {&state};
  return detail::read_parts<Scalar>(parts, 1, query, family, ws, policy);
}

template <typename Scalar = double>
AttentionOutput read_output(const AttentionState& state, const Eigen::VectorXd& query,
                            const BasisFamily& family,
                            DenominatorPolicy policy = DenominatorPolicy::kRaise) {
  AttendWorkspace<Scalar> ws(family);
  return read_output<Scalar>(state, query, family, ws, policy);
}

/// Streaming causal attention: output t reads the state after tokens 1..t.
/// Memory high-water mark is one state plus one token's features.
template <typename Scalar = double>
AttendResult attend_stream(const TokenBatch& tokens, const BasisFamily& family,
                           DenominatorPolicy policy = DenominatorPolicy::kRaise) {
  tokens.validate();
  const std::int64_t n = tokens.size();
  if (n == 0) throw domain_error("attend_stream: empty token sequence");

  AttentionState state = init_state(family, tokens.value_width());
  AttendWorkspace<Scalar> ws(family);
  AttendResult result;
  result.outputs.resize(n, tokens.value_width());
  result.denominators.resize(n);

  Eigen::VectorXd q, k, v;
  for (std::int64_t t = 0; t < n; ++t) {
    q = tokens.queries.row(t).transpose();
    k = tokens.keys.row(t).transpose();
    v = tokens.values.row(t).transpose();
    update_state<Scalar>(state, k, v, family, ws);
    try {
      AttentionOutput out = read_output<Scalar>(state, q, family, ws, policy);
      result.outputs.row(t) = out.output.transpose();
      result.denominators[t] = out.denominator;
      if (!out.output.allFinite() || std::isnan(out.output[0]))
        result.degenerate_tokens.push_back(t);
    } catch (degenerate_denominator_error& e) {
      e.token_index = t;
      throw;
    }
  }
  return result;
}

/// Chunked evaluation. Each chunk's partial state is accumulated from that
/// chunk's tokens alone; the carry of all previous chunks is folded in by
/// elementwise state addition; readouts inside a chunk see carry + partial.
/// Chunk order is fixed, so results are reproducible run to run, and a
/// single chunk covering the whole sequence performs bit-identical
/// arithmetic to attend_stream.
template <typename Scalar = double>
AttendResult attend_scan(const TokenBatch& tokens, const BasisFamily& family,
                         std::int64_t chunk_size,
                         DenominatorPolicy policy = DenominatorPolicy::kRaise) {
  tokens.validate();
  if (chunk_size < 1) throw domain_error("attend_scan: chunk_size must be >= 1");
  const std::int64_t n = tokens.size();
  if (n == 0) throw domain_error("attend_scan: empty token sequence");

  AttentionState carry = init_state(family, tokens.value_width());
  AttentionState local = init_state(family, tokens.value_width());
  AttendWorkspace<Scalar> ws(family);
  AttendResult result;
  result.outputs.resize(n, tokens.value_width());
  result.denominators.resize(n);

  Eigen::VectorXd q, k, v;
  for (std::int64_t begin = 0; begin < n; begin += chunk_size) {
    const std::int64_t end = std::min(n, begin + chunk_size);
    local.set_zero();
    for (std::int64_t t = begin; t < end; ++t) {
      q = tokens.queries.row(t).transpose();
      k = tokens.keys.row(t).transpose();
      v = tokens.values.row(t).transpose();
      update_state<Scalar>(local, k, v, family, ws);
      const AttentionState* parts[2] = {&carry, &local};
      try {
        AttentionOutput out = detail::read_parts<Scalar>(parts, 2, q, family, ws, policy);
        result.outputs.row(t) = out.output.transpose();
        result.denominators[t] = out.denominator;
        if (!out.output.allFinite() || std::isnan(out.output[0]))
          result.degenerate_tokens.push_back(t);
      } catch (degenerate_denominator_error& e) {
        e.token_index = t;
        throw;
      }
    }
    combine_into(carry, local);
  }
  return result;
}

/// Exact causal softmax attention, the ground truth of every comparison.
/// Evaluated in double precision with max-subtraction stabilization.
inline Eigen::VectorXd softmax_attend_one(const Eigen::VectorXd& query,
                                          const Eigen::Ref<const Eigen::MatrixXd>& keys,
                                          const Eigen::Ref<const Eigen::MatrixXd>& values,
                                          double scale, double* denominator_out = nullptr) {
  if (keys.cols() != query.size()) throw domain_error("softmax_attend_one: width mismatch");
  if (keys.rows() != values.rows()) throw domain_error("softmax_attend_one: history mismatch");
  Eigen::VectorXd logits = (keys * query) / scale;
  const double m = logits.maxCoeff();
  Eigen::VectorXd w = (logits.array() - m).exp();
  const double z = w.sum();
  if (denominator_out) *denominator_out = z * std::exp(m);
  return values.transpose() * w / z;
}

inline AttendResult conventional_attention(const TokenBatch& tokens, double scale) {
  tokens.validate();
  const std::int64_t n = tokens.size();
  if (n == 0) throw domain_error("conventional_attention: empty token sequence");
  if (!(scale > 0.0)) throw domain_error("conventional_attention: scale must be positive");

  AttendResult result;
  result.outputs.resize(n, tokens.value_width());
  result.denominators.resize(n);
  Eigen::VectorXd q;
  for (std::int64_t t = 0; t < n; ++t) {
    q = tokens.queries.row(t).transpose();
    double denom = 0.0;
    result.outputs.row(t) = softmax_attend_one(q, tokens.keys.topRows(t + 1),
                                               tokens.values.topRows(t + 1), scale, &denom)
                                .transpose();
    result.denominators[t] = denom;
  }
  return result;
}

}  // namespace tattn

#endif  // TATTN_ATTENTION_HPP
