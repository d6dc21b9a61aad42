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

#include "tattn/basis.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>
#include <vector>

using namespace tattn;

namespace {

// Brute-force oracle: visit every raw tuple in [1,d]^p.
template <typename F>
void for_each_raw_tuple(int d, int p, F&& f) {
  std::vector<std::int32_t> cur(p, 1);
  for (;;) {
    f(cur);
    int j = p - 1;
    while (j >= 0 && cur[j] == d) --j;
    if (j < 0) break;
    ++cur[j];
    for (int r = j + 1; r < p; ++r) cur[r] = 1;
  }
}

// Oracle: count distinct permutations by exhaustive next_permutation.
std::int64_t count_permutations(IndexTuple t) {
  std::sort(t.begin(), t.end());
  std::int64_t n = 0;
  do {
    ++n;
  } while (std::next_permutation(t.begin(), t.end()));
  return n;
}

}  // namespace

TEST_CASE("enumerate_index_tuples worked examples") {
  CHECK(enumerate_index_tuples(2, 2) ==
        std::vector<IndexTuple>{{1, 1}, {1, 2}, {2, 2}});
  CHECK(enumerate_index_tuples(3, 0) == std::vector<IndexTuple>{{}});
  // Expected list derived by brute force: sorted representatives of all 2^3
  // raw tuples.
  CHECK(enumerate_index_tuples(2, 3) ==
        std::vector<IndexTuple>{{1, 1, 1}, {1, 1, 2}, {1, 2, 2}, {2, 2, 2}});
}

TEST_CASE("enumerate_index_tuples rejects invalid domains") {
  CHECK_THROWS_AS(enumerate_index_tuples(0, 2), domain_error);
  CHECK_THROWS_AS(enumerate_index_tuples(3, -1), domain_error);
}

TEST_CASE("tuple count matches C(d+p-1, p) and order is strictly increasing") {
  for (int d = 1; d <= 8; ++d) {
    for (int p = 0; p <= 5; ++p) {
      const auto tuples = enumerate_index_tuples(d, p);
      CHECK(static_cast<std::int64_t>(tuples.size()) == binomial(d + p - 1, p));
      for (std::size_t i = 1; i < tuples.size(); ++i) CHECK(tuples[i - 1] < tuples[i]);
      for (const auto& t : tuples) CHECK(std::is_sorted(t.begin(), t.end()));
    }
  }
}

TEST_CASE("tuple_multiplicity examples and permutation oracle") {
  CHECK(tuple_multiplicity({1, 2}) == 2);
  CHECK(tuple_multiplicity({1, 1, 1}) == 1);
  CHECK(tuple_multiplicity({1, 2, 2}) == 3);
  CHECK(tuple_multiplicity({1, 2, 3}) == 6);
  CHECK(tuple_multiplicity({}) == 1);
  CHECK_THROWS_AS(tuple_multiplicity({2, 1}), domain_error);

  for (int d = 1; d <= 4; ++d)
    for (int p = 0; p <= 5; ++p)
      for (const auto& t : enumerate_index_tuples(d, p))
        CHECK(tuple_multiplicity(t) == count_permutations(t));
}

TEST_CASE("build_degree_basis worked examples") {
  const auto b22 = build_degree_basis(2, 2);
  CHECK(b22.basis_size() == 3);
  CHECK(b22.multiplicities[0] == 1);
  CHECK(b22.multiplicities[1] == 2);
  CHECK(b22.multiplicities[2] == 1);

  const auto b0 = build_degree_basis(7, 0);
  CHECK(b0.basis_size() == 1);
  CHECK(b0.multiplicities[0] == 1);
  CHECK(b0.index_matrix.cols() == 0);

  const auto b32 = build_degree_basis(3, 2);
  CHECK(b32.basis_size() == 6);
  CHECK(b32.multiplicities.sum() == 9);
}

TEST_CASE("multiplicities sum to d^p and cover every raw tuple") {
  for (int d = 1; d <= 8; ++d) {
    for (int p = 0; p <= 5; ++p) {
      const auto basis = build_degree_basis(d, p);
      CHECK(basis.multiplicities.sum() == ipow(d, p));
    }
  }

  // Permutation closure: sorting each raw tuple must land on a basis row,
  // and the hit counts must reproduce the stored multiplicities.
  for (int d = 1; d <= 5; ++d) {
    for (int p = 0; p <= 4; ++p) {
      const auto basis = build_degree_basis(d, p);
      std::map<IndexTuple, std::int64_t> hits;
      for_each_raw_tuple(d, p, [&](const std::vector<std::int32_t>& raw) {
        IndexTuple sorted = raw;
        std::sort(sorted.begin(), sorted.end());
        ++hits[sorted];
      });
      REQUIRE(static_cast<std::int64_t>(hits.size()) == basis.basis_size());
      for (Eigen::Index i = 0; i < basis.basis_size(); ++i) {
        IndexTuple row(static_cast<std::size_t>(basis.degree));
        for (int j = 0; j < basis.degree; ++j) row[static_cast<std::size_t>(j)] = basis.index_matrix(i, j);
        REQUIRE(hits.count(row) == 1);
        CHECK(hits[row] == basis.multiplicities[i]);
      }
    }
  }
}

TEST_CASE("degree containment: every row extends to a higher-degree row") {
  for (int d = 2; d <= 5; ++d) {
    for (int p = 1; p <= 4; ++p) {
      const auto lower = build_degree_basis(d, p - 1);
      const auto upper = enumerate_index_tuples(d, p);
      for (Eigen::Index i = 0; i < lower.basis_size(); ++i) {
        IndexTuple extended(static_cast<std::size_t>(p));
        for (int j = 0; j < p - 1; ++j) extended[static_cast<std::size_t>(j)] = lower.index_matrix(i, j);
        extended[static_cast<std::size_t>(p - 1)] = d;  // stays nondecreasing
        CHECK(std::binary_search(upper.begin(), upper.end(), extended));
      }
    }
  }
}

TEST_CASE("build_basis_family coefficients") {
  const auto f1 = build_basis_family(2, 3, 1.0);
  REQUIRE(f1.taylor_coefficients.size() == 3);
  CHECK(f1.taylor_coefficients[0] == doctest::Approx(1.0));
  CHECK(f1.taylor_coefficients[1] == doctest::Approx(1.0));
  CHECK(f1.taylor_coefficients[2] == doctest::Approx(0.5));

  const auto f2 = build_basis_family(5, 1, 3.0);
  REQUIRE(f2.taylor_coefficients.size() == 1);
  CHECK(f2.taylor_coefficients[0] == 1.0);
  CHECK(f2.degree_bases.size() == 1);

  const auto f3 = build_basis_family(4, 4, 2.0);
  CHECK(f3.taylor_coefficients[0] == doctest::Approx(1.0));
  CHECK(f3.taylor_coefficients[1] == doctest::Approx(0.5));
  CHECK(f3.taylor_coefficients[2] == doctest::Approx(0.125));
  CHECK(f3.taylor_coefficients[3] == doctest::Approx(1.0 / 48.0));
}

TEST_CASE("build_basis_family is deterministic and budget-guarded") {
  const auto a = build_basis_family(3, 4, 2.0);
  const auto b = build_basis_family(3, 4, 2.0);
  REQUIRE(a.degree_bases.size() == b.degree_bases.size());
  for (std::size_t p = 0; p < a.degree_bases.size(); ++p) {
    CHECK(a.degree_bases[p].index_matrix == b.degree_bases[p].index_matrix);
    CHECK(a.degree_bases[p].multiplicities == b.degree_bases[p].multiplicities);
  }
  CHECK(a.feature_count() == binomial(3 + 4 - 1, 4 - 1));

  CHECK_THROWS_AS(build_basis_family(128, 6), budget_error);
  CHECK_THROWS_AS(build_basis_family(0, 2, 1.0), domain_error);
  CHECK_THROWS_AS(build_basis_family(4, 0, 1.0), domain_error);
  CHECK_THROWS_AS(build_basis_family(4, 2, 0.0), domain_error);
}

TEST_CASE("taylor coefficients decay; fourth term sits below half resolution at c=8") {
  // Nonincreasing for c >= 1 (alpha_0 = alpha_1 when c = 1), strictly
  // decreasing beyond that.
  for (double c : {1.0, 2.0, 8.0}) {
    const auto f = build_basis_family(4, 6, c);
    for (int p = 1; p < 6; ++p) {
      CHECK(f.taylor_coefficients[p] <= f.taylor_coefficients[p - 1]);
      if (c > 1.0 || p > 1) CHECK(f.taylor_coefficients[p] < f.taylor_coefficients[p - 1]);
    }
  }
  const auto f64 = build_basis_family(64, 5);  // c = 8
  CHECK(f64.taylor_coefficients[4] == doctest::Approx(1.0 / (24.0 * 4096.0)));
  CHECK(f64.taylor_coefficients[4] < std::pow(2.0, -10));
}

TEST_CASE("basis CSV export") {
  std::ostringstream os;
  write_basis_csv(os, build_basis_family(2, 3, 1.0));
  CHECK(os.str() ==
        "degree,row,indices,multiplicity\n"
        "0,0,,1\n"
        "1,0,1,1\n"
        "1,1,2,1\n"
        "2,0,1|1,1\n"
        "2,1,1|2,2\n"
        "2,2,2|2,1\n");
}
