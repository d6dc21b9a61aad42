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

#ifndef TATTN_BASIS_HPP
#define TATTN_BASIS_HPP

#include "tattn/combinatorics.hpp"
#include "tattn/errors.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

namespace tattn {

// The minimal monomial basis for a degree-p polynomial kernel term over
// vectors of width d is the set of degree-p monomials with nondecreasing
// 1-based index tuples i_1 <= i_2 <= ... <= i_p. There are
// C(d + p - 1, p) of them; every one of the d^p entries of the full
// symmetric tensor is a permutation of exactly one basis monomial.
//
// Tuples are enumerated in strictly increasing lexicographic order, which
// makes the packed layout reproducible and serializable. Indices are
// 1-based throughout the domain model; the feature-map evaluation layer is
// the single place that converts to 0-based addressing.
//
// The index rows are hierarchical: for p > 0, every row of the degree-(p-1)
// matrix extends to a row of the degree-p matrix by appending any index >=
// its last entry. This structure is documented and tested but deliberately
// not exploited for shared-subproduct evaluation.

using IndexTuple = std::vector<std::int32_t>;

/// Precomputed index matrix and permutation multiplicities for one degree.
struct DegreeBasis {
  int degree = 0;
  int key_width = 0;
  /// m_p x p, entries in [1, key_width], rows lexicographically increasing.
  Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> index_matrix;
  /// Number of distinct permutations of each row in the full symmetric tensor.
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> multiplicities;

  std::int64_t basis_size() const { return multiplicities.size(); }
};

/// All degree bases 0..P-1 for one key width, plus the series coefficients.
struct BasisFamily {
  int key_width = 0;
  int truncation_order = 0;  // P, number of series terms retained
  double scale = 1.0;        // c in exp(q.k / c)
  std::vector<DegreeBasis> degree_bases;
  Eigen::VectorXd taylor_coefficients;  // alpha_p = 1 / (p! c^p)

  /// Total packed feature count, sum of m_p = C(d + P - 1, P - 1).
  std::int64_t feature_count() const {
    std::int64_t n = 0;
    for (const auto& b : degree_bases) n += b.basis_size();
    return n;
  }
};

/// Default cap on accumulator elements; configurations above this fail fast
/// instead of exhausting memory.
inline constexpr std::int64_t kDefaultElementBudget = std::int64_t{1} << 28;

/// All nondecreasing tuples of length `degree` over [1, key_width], in
/// strictly increasing lexicographic order. Degree 0 yields one empty tuple.
inline std::vector<IndexTuple> enumerate_index_tuples(int key_width, int degree) {
  if (key_width < 1) throw domain_error("enumerate_index_tuples: key_width must be >= 1");
  if (degree < 0) throw domain_error("enumerate_index_tuples: degree must be >= 0");

  std::vector<IndexTuple> out;
  out.reserve(static_cast<std::size_t>(binomial(key_width + degree - 1, degree)));
  IndexTuple cur(degree, 1);
  for (;;) {
    out.push_back(cur);
    // Advance the odometer: bump the rightmost position that can grow, then
    // level everything to its right so the tuple stays nondecreasing.
    int j = degree - 1;
    while (j >= 0 && cur[j] == key_width) --j;
    if (j < 0) break;
    ++cur[j];
    for (int r = j + 1; r < degree; ++r) cur[r] = cur[j];
  }
  return out;
}

/// Number of distinct permutations of a nondecreasing tuple:
/// p! / prod_v (count of v)!. Computed as a product of binomials so every
/// intermediate stays integral.
inline std::int64_t tuple_multiplicity(const IndexTuple& tuple) {
  std::int64_t result = 1;
  std::int64_t placed = 0;
  std::size_t run_start = 0;
  for (std::size_t i = 0; i <= tuple.size(); ++i) {
    if (i < tuple.size() && i > 0 && tuple[i] < tuple[i - 1])
      throw domain_error("tuple_multiplicity: tuple must be nondecreasing");
    if (i == tuple.size() || (i > 0 && tuple[i] != tuple[i - 1])) {
      const std::int64_t run = static_cast<std::int64_t>(i - run_start);
      placed += run;
      result = checked_mul(result, binomial(placed, run));
      run_start = i;
    }
  }
  return result;
}

/// Index matrix and multiplicities for one degree.
inline DegreeBasis build_degree_basis(int key_width, int degree) {
  const auto tuples = enumerate_index_tuples(key_width, degree);
  DegreeBasis basis;
  basis.degree = degree;
  basis.key_width = key_width;
  basis.index_matrix.resize(static_cast<Eigen::Index>(tuples.size()), degree);
  basis.multiplicities.resize(static_cast<Eigen::Index>(tuples.size()));
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    for (int j = 0; j < degree; ++j) basis.index_matrix(static_cast<Eigen::Index>(i), j) = tuples[i][j];
    basis.multiplicities[static_cast<Eigen::Index>(i)] = tuple_multiplicity(tuples[i]);
  }
  return basis;
}

/// Bases for degrees 0..truncation_order-1 with coefficients
/// alpha_p = 1 / (p! c^p), computed by iterated division to avoid factorial
/// overflow. Fails fast if the packed feature count exceeds the budget.
inline BasisFamily build_basis_family(int key_width, int truncation_order, double scale,
                                      std::int64_t element_budget = kDefaultElementBudget) {
  if (key_width < 1) throw domain_error("build_basis_family: key_width must be >= 1");
  if (truncation_order < 1) throw domain_error("build_basis_family: truncation_order must be >= 1");
  if (!(scale > 0.0)) throw domain_error("build_basis_family: scale must be positive");

  const std::int64_t features = binomial(key_width + truncation_order - 1, truncation_order - 1);
  if (features > element_budget) throw budget_error(features, element_budget);

  BasisFamily family;
  family.key_width = key_width;
  family.truncation_order = truncation_order;
  family.scale = scale;
  family.degree_bases.reserve(static_cast<std::size_t>(truncation_order));
  family.taylor_coefficients.resize(truncation_order);
  double alpha = 1.0;
  for (int p = 0; p < truncation_order; ++p) {
    if (p > 0) alpha /= static_cast<double>(p) * scale;
    family.taylor_coefficients[p] = alpha;
    family.degree_bases.push_back(build_degree_basis(key_width, p));
  }
  return family;
}

/// Same, with the conventional scale c = sqrt(key_width).
inline BasisFamily build_basis_family(int key_width, int truncation_order) {
  if (key_width < 1) throw domain_error("build_basis_family: key_width must be >= 1");
  return build_basis_family(key_width, truncation_order, std::sqrt(static_cast<double>(key_width)));
}

/// CSV export: header `degree,row,indices,multiplicity`, indices as a
/// |-separated 1-based tuple (empty for degree 0), rows in canonical order.
inline void write_basis_csv(std::ostream& os, const BasisFamily& family) {
  os << "degree,row,indices,multiplicity\n";
  for (const auto& basis : family.degree_bases) {
    for (Eigen::Index i = 0; i < basis.basis_size(); ++i) {
      os << basis.degree << ',' << i << ',';
      for (int j = 0; j < basis.degree; ++j) {
        if (j > 0) os << '|';
        os << basis.index_matrix(i, j);
      }
      os << ',' << basis.multiplicities[i] << '\n';
    }
  }
}

}  // namespace tattn

#endif  // TATTN_BASIS_HPP
