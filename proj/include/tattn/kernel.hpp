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

#ifndef TATTN_KERNEL_HPP
#define TATTN_KERNEL_HPP

#include "tattn/basis.hpp"
#include "tattn/feature_map.hpp"

#include <cmath>
#include <cstdlib>

namespace tattn {

/// Truncation order and scale of the exponential kernel approximation.
struct KernelConfig {
  int truncation_order = 4;
  double scale = 1.0;
};

/// exp(q.k / scale), the exact kernel.
template <typename Scalar>
Scalar kernel_exact(const VecX<Scalar>& q, const VecX<Scalar>& k, Scalar scale) {
  if (q.size() != k.size()) throw domain_error("kernel_exact: width mismatch");
  if (!(scale > Scalar(0))) throw domain_error("kernel_exact: scale must be positive");
  return std::exp(q.dot(k) / scale);
}

/// Truncated kernel sum_{p<P} alpha_p (q.k)^p, evaluated through the packed
/// feature maps — the same per-degree dot products the attention readout
/// performs — never through scalar powers. The scalar partial sum is the
/// test oracle only.
template <typename Scalar>
Scalar kernel_truncated(const VecX<Scalar>& q, const VecX<Scalar>& k, const BasisFamily& family) {
  if (q.size() != k.size()) throw domain_error("kernel_truncated: width mismatch");
  if (q.size() != family.key_width) throw domain_error("kernel_truncated: basis width mismatch");
  Scalar acc = Scalar(0);
  for (int p = 0; p < family.truncation_order; ++p) {
    const auto& basis = family.degree_bases[static_cast<std::size_t>(p)];
    const VecX<Scalar> fq = phi<Scalar>(q, basis);
    const VecX<Scalar> fk =
        phi_weighted<Scalar>(k, basis, static_cast<Scalar>(family.taylor_coefficients[p]));
    acc += fq.dot(fk);
  }
  return acc;
}

/// |exp(z) - sum_{p<P} z^p / p!|, the magnitude the truncation discards.
inline double truncation_residual(double dot_over_c, int terms) {
  if (terms < 1) throw domain_error("truncation_residual: need at least one term");
  double sum = 0.0;
  double term = 1.0;
  for (int p = 0; p < terms; ++p) {
    if (p > 0) term *= dot_over_c / static_cast<double>(p);
    sum += term;
  }
  return std::abs(std::exp(dot_over_c) - sum);
}

}  // namespace tattn

#endif  // TATTN_KERNEL_HPP
