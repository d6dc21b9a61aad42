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

#include "tattn/feature_map.hpp"

#include "tattn/philox.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace tattn;

namespace {

Eigen::VectorXd sample_normal(Philox4x32& rng, int d) {
  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x[i] = rng.next_normal();
  return x;
}

// Full symmetric-tensor oracle: sum over all d^p raw index tuples of
// prod_j q[i_j] * prod_j k[i_j].
double naive_inner(const Eigen::VectorXd& q, const Eigen::VectorXd& k, int p) {
  const int d = static_cast<int>(q.size());
  std::vector<int> idx(static_cast<std::size_t>(p), 0);
  double total = 0.0;
  for (;;) {
    double term = 1.0;
    for (int j = 0; j < p; ++j) term *= q[idx[static_cast<std::size_t>(j)]];
    for (int j = 0; j < p; ++j) term *= k[idx[static_cast<std::size_t>(j)]];
    total += term;
    int j = p - 1;
    while (j >= 0 && idx[static_cast<std::size_t>(j)] == d - 1) --j;
    if (j < 0) break;
    ++idx[static_cast<std::size_t>(j)];
    for (int r = j + 1; r < p; ++r) idx[static_cast<std::size_t>(r)] = 0;
  }
  return total;
}

// Magnitude of the monomial mass, (sum_i |q_i k_i|)^p: the natural scale
// against which the rounding of the packed inner product is measured.
double monomial_mass(const Eigen::VectorXd& q, const Eigen::VectorXd& k, int p) {
  return std::pow(q.cwiseAbs().dot(k.cwiseAbs()), p);
}

}  // namespace

TEST_CASE("phi worked examples") {
  Eigen::VectorXd x(2);
  x << 2.0, 3.0;
  const auto basis = build_degree_basis(2, 2);
  const Eigen::VectorXd f = phi<double>(x, basis);
  REQUIRE(f.size() == 3);
  CHECK(f[0] == 4.0);
  CHECK(f[1] == 6.0);
  CHECK(f[2] == 9.0);

  const auto basis0 = build_degree_basis(2, 0);
  const Eigen::VectorXd f0 = phi<double>(x, basis0);
  REQUIRE(f0.size() == 1);
  CHECK(f0[0] == 1.0);

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(3);
  const auto basis34 = build_degree_basis(3, 4);
  CHECK(phi<double>(ones, basis34).isOnes());
}

TEST_CASE("phi rejects width mismatch") {
  const auto basis = build_degree_basis(3, 2);
  Eigen::VectorXd x(2);
  x << 1.0, 2.0;
  CHECK_THROWS_AS(phi<double>(x, basis), domain_error);
}

TEST_CASE("weighted_inner worked examples") {
  const auto basis = build_degree_basis(2, 2);
  Eigen::VectorXd q(2), k(2);
  q << 2.0, 3.0;
  k << 1.0, 1.0;
  const double wi = weighted_inner<double>(phi<double>(q, basis), phi<double>(k, basis), basis);
  CHECK(wi == doctest::Approx(25.0));  // ((2,3).(1,1))^2 = 5^2

  const auto basis0 = build_degree_basis(2, 0);
  CHECK(weighted_inner<double>(phi<double>(q, basis0), phi<double>(k, basis0), basis0) == 1.0);

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  CHECK(weighted_inner<double>(phi<double>(q, basis), phi<double>(zero, basis), basis) == 0.0);

  Eigen::VectorXd short_vec(2);
  CHECK_THROWS_AS(weighted_inner<double>(short_vec, short_vec, basis), domain_error);
}

TEST_CASE("phi_weighted worked examples") {
  const auto basis = build_degree_basis(2, 2);
  Eigen::VectorXd x(2);
  x << 1.0, 1.0;
  const Eigen::VectorXd w = phi_weighted<double>(x, basis, 1.0);
  REQUIRE(w.size() == 3);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == 2.0);
  CHECK(w[2] == 1.0);

  CHECK(phi_weighted<double>(x, basis, 0.0).isZero());
}

TEST_CASE("dot(phi(q), phi_weighted(k, a)) = a (q.k)^p") {
  Philox4x32 rng(7, 0);
  for (int d = 1; d <= 6; ++d) {
    for (int p = 0; p <= 4; ++p) {
      const auto basis = build_degree_basis(d, p);
      const Eigen::VectorXd q = sample_normal(rng, d);
      const Eigen::VectorXd k = sample_normal(rng, d);
      const double alpha = 0.37;
      const double got = phi<double>(q, basis).dot(phi_weighted<double>(k, basis, alpha));
      const double want = alpha * std::pow(q.dot(k), p);
      CHECK(std::abs(got - want) <= 1e-10 * (1.0 + alpha * monomial_mass(q, k, p)));
    }
  }
}

TEST_CASE("polynomial identity: weighted inner equals (q.k)^p") {
  // 100 standard-normal pairs per (d, p) cell. Tolerance is relative to the
  // monomial mass, the conditioning scale of the packed sum.
  Philox4x32 rng(1002, 0);
  for (int d = 1; d <= 8; ++d) {
    for (int p = 0; p <= 5; ++p) {
      const auto basis = build_degree_basis(d, p);
      for (int rep = 0; rep < 100; ++rep) {
        const Eigen::VectorXd q = sample_normal(rng, d);
        const Eigen::VectorXd k = sample_normal(rng, d);
        const double got =
            weighted_inner<double>(phi<double>(q, basis), phi<double>(k, basis), basis);
        const double want = std::pow(q.dot(k), p);
        const double scale = std::max(std::abs(want), monomial_mass(q, k, p));
        REQUIRE(std::abs(got - want) <= 1e-10 * std::max(1.0, scale));
      }
    }
  }
}

TEST_CASE("packed inner product equals the naive full-tensor expansion") {
  Philox4x32 rng(1003, 0);
  for (int d = 1; d <= 4; ++d) {
    for (int p = 0; p <= 3; ++p) {
      const auto basis = build_degree_basis(d, p);
      for (int rep = 0; rep < 20; ++rep) {
        const Eigen::VectorXd q = sample_normal(rng, d);
        const Eigen::VectorXd k = sample_normal(rng, d);
        const double got =
            weighted_inner<double>(phi<double>(q, basis), phi<double>(k, basis), basis);
        const double want = naive_inner(q, k, p);
        REQUIRE(std::abs(got - want) <= 1e-12 * std::max(1.0, monomial_mass(q, k, p)));
      }
    }
  }
}

TEST_CASE("homogeneity: phi(s x) = s^p phi(x)") {
  Philox4x32 rng(1004, 0);
  for (int d : {1, 3, 5}) {
    for (int p = 0; p <= 4; ++p) {
      const auto basis = build_degree_basis(d, p);
      const Eigen::VectorXd x = sample_normal(rng, d);
      const double s = 1.0 + rng.next_uniform();
      const Eigen::VectorXd lhs = phi<double>((s * x).eval(), basis);
      const Eigen::VectorXd rhs = std::pow(s, p) * phi<double>(x, basis);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * rhs.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("packing ratio m_p / d^p shrinks with degree") {
  for (int d : {2, 4, 8}) {
    double prev = 1.0;
    for (int p = 2; p <= 5; ++p) {
      const double ratio = static_cast<double>(binomial(d + p - 1, p)) /
                           static_cast<double>(ipow(d, p));
      CHECK(ratio < 1.0);
      CHECK(ratio < prev);
      prev = ratio;
    }
  }
}

TEST_CASE("single-precision feature products stay close to double") {
  Philox4x32 rng(1005, 0);
  const auto basis = build_degree_basis(4, 3);
  const Eigen::VectorXd x = sample_normal(rng, 4);
  const VecX<float> xf = x.cast<float>();
  const VecX<float> ff = phi<float>(xf, basis);
  const Eigen::VectorXd fd = phi<double>(x, basis);
  CHECK((ff.cast<double>() - fd).cwiseAbs().maxCoeff() <= 1e-5 * fd.cwiseAbs().maxCoeff());
}
