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

#ifndef TATTN_FEATURE_MAP_HPP
#define TATTN_FEATURE_MAP_HPP

#include "tattn/basis.hpp"
#include "tattn/errors.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace tattn {

// Packed monomial feature maps. phi gathers the basis monomials of its
// input; the multiplicity-weighted inner product of two feature vectors
// recovers the plain power (q.k)^p of the dot product.
//
// Per-row products are evaluated left to right over the p gathered factors;
// this fixes the floating-point rounding profile of every feature.

template <typename Scalar>
using VecX = Eigen::Vector<Scalar, Eigen::Dynamic>;
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {

/// Writes prescale * multiplicity_i * prod_j x[M(i,j)] for every basis row.
/// Products are evaluated in Scalar precision and widened on store, so a
/// single-precision run still feeds double accumulators downstream.
template <typename Scalar, typename Out>
void phi_weighted_into(const VecX<Scalar>& x, const DegreeBasis& basis, Scalar prescale,
                       Out* out) {
  const auto& index = basis.index_matrix;
  const std::int64_t m = basis.basis_size();
  const int p = basis.degree;
  for (std::int64_t i = 0; i < m; ++i) {
    Scalar prod = prescale * static_cast<Scalar>(basis.multiplicities[i]);
    for (int j = 0; j < p; ++j) prod *= x[index(i, j) - 1];
    out[i] = static_cast<Out>(prod);
  }
}

/// Unweighted variant: out_i = prod_j x[M(i,j)].
template <typename Scalar, typename Out>
void phi_into(const VecX<Scalar>& x, const DegreeBasis& basis, Out* out) {
  const auto& index = basis.index_matrix;
  const std::int64_t m = basis.basis_size();
  const int p = basis.degree;
  for (std::int64_t i = 0; i < m; ++i) {
    Scalar prod = Scalar(1);
    for (int j = 0; j < p; ++j) prod *= x[index(i, j) - 1];
    out[i] = static_cast<Out>(prod);
  }
}

inline void require_width(const DegreeBasis& basis, Eigen::Index width) {
  if (width != basis.key_width)
    throw domain_error("feature map: input width " + std::to_string(width) +
                       " does not match basis key_width " + std::to_string(basis.key_width));
}

}  // namespace detail

/// Packed monomials of x for one degree: values[i] = prod_j x[M(i,j)].
/// Degree 0 returns the single empty product, 1.
template <typename Scalar>
VecX<Scalar> phi(const VecX<Scalar>& x, const DegreeBasis& basis) {
  detail::require_width(basis, x.size());
  VecX<Scalar> out(basis.basis_size());
  detail::phi_into<Scalar, Scalar>(x, basis, out.data());
  return out;
}

/// Multiplicity-weighted inner product <a, b>_{C_p} = sum_i c_i a_i b_i.
template <typename Scalar>
Scalar weighted_inner(const VecX<Scalar>& a, const VecX<Scalar>& b, const DegreeBasis& basis) {
  if (a.size() != basis.basis_size() || b.size() != basis.basis_size())
    throw domain_error("weighted_inner: feature length does not match basis size");
  Scalar acc = Scalar(0);
  for (std::int64_t i = 0; i < basis.basis_size(); ++i)
    acc += static_cast<Scalar>(basis.multiplicities[i]) * a[i] * b[i];
  return acc;
}

/// Key-side features with the diagonal weights and a scalar folded in:
/// values[i] = prescale * c_i * prod_j x[M(i,j)]. A plain dot product of
/// phi(q) with phi_weighted(k, alpha_p) then equals alpha_p (q.k)^p.
template <typename Scalar>
VecX<Scalar> phi_weighted(const VecX<Scalar>& x, const DegreeBasis& basis, Scalar prescale) {
  detail::require_width(basis, x.size());
  VecX<Scalar> out(basis.basis_size());
  detail::phi_weighted_into<Scalar, Scalar>(x, basis, prescale, out.data());
  return out;
}

}  // namespace tattn

#endif  // TATTN_FEATURE_MAP_HPP
