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

#include "tattn/cost_model.hpp"

#include "tattn/attention.hpp"
#include "tattn/basis.hpp"

#include <doctest.h>

#include <vector>

using namespace tattn;

TEST_CASE("Rational arithmetic is exact and normalized") {
  CHECK(Rational(4, 6) == Rational(2, 3));
  CHECK(Rational(3, -6) == Rational(-1, 2));
  CHECK((Rational(1, 3) + Rational(1, 6)) == Rational(1, 2));
  CHECK((Rational(2, 3) * Rational(9, 4)) == Rational(3, 2));
  CHECK(Rational(7).is_integer());
  CHECK(!Rational(7, 2).is_integer());
  CHECK(Rational(7, 2).to_string() == "7/2");
  CHECK_THROWS_AS(Rational(1, 0), domain_error);
}

TEST_CASE("hidden state size formulas") {
  CHECK(hidden_state_size_degree(2, 2, 2) == 9);
  CHECK(hidden_state_size_degree(5, 7, 0) == 8);
  CHECK(hidden_state_size_degree(64, 64, 3) == 2974400);
  CHECK(hidden_state_size_total(64, 64, 4) == 3113825);
  CHECK(hidden_state_size_total(9, 7, 1) == 8);
  CHECK_THROWS_AS(hidden_state_size_degree(0, 1, 1), domain_error);
}

TEST_CASE("total state equals the per-degree sum (hockey stick)") {
  for (int d : {1, 2, 3, 4, 5, 6, 7, 8, 16, 32, 64, 128}) {
    for (int P = 1; P <= 6; ++P) {
      std::int64_t sum = 0;
      for (int p = 0; p < P; ++p) sum += hidden_state_size_degree(d, d, p);
      CHECK(hidden_state_size_total(d, d, P) == sum);
    }
  }
}

TEST_CASE("state size formula matches the allocated state") {
  const auto fam = build_basis_family(8, 4);
  CHECK(init_state(fam, 8).element_count() == hidden_state_size_total(8, 8, 4));
  const auto fam2 = build_basis_family(3, 5);
  CHECK(init_state(fam2, 6).element_count() == hidden_state_size_total(3, 6, 5));
}

TEST_CASE("per-token FLOP formulas") {
  CHECK(flops_per_token_degree(2, 2, 2) == 48);
  CHECK(flops_per_token_degree(64, 64, 0) == 260);
  CHECK(flops_per_token_degree(64, 64, 3) == 12172160);
  CHECK(flops_per_token_total_sum(64, 64, 4) == 12738308);
  CHECK(flops_per_token_total_sum(2, 2, 3) == 88);
  CHECK(flops_per_token_total(2, 2, 3) == Rational(88));
}

TEST_CASE("closed form equals the per-degree sum under exact arithmetic") {
  for (int d : {1, 2, 3, 4, 5, 6, 7, 8, 16, 32, 64, 128}) {
    for (int P = 1; P <= 6; ++P) {
      const Rational closed = flops_per_token_total(d, d, P);
      CHECK(closed.is_integer());
      CHECK(closed == Rational(flops_per_token_total_sum(d, d, P)));
    }
  }
}

TEST_CASE("conventional cost accounting") {
  const auto c = conventional_costs(1, 64, 64);
  CHECK(c.kv_cache_elements == 128);
  CHECK(c.flops_per_token == 259);
  CHECK(conventional_costs(100000, 64, 64).kv_cache_elements == 12800000);
  CHECK_THROWS_AS(conventional_costs(0, 64, 64), domain_error);
}

TEST_CASE("naive feature counts") {
  CHECK(naive_feature_count(2, 3) == 8);
  CHECK(naive_feature_count(64, 3) == 262144);
  CHECK(naive_feature_count_total(2, 3) == 1 + 2 + 4);
  // Packing gain: the packed basis is orders of magnitude smaller at d = 64.
  CHECK(binomial(64 + 3 - 1, 3) == 45760);
  CHECK(naive_feature_count(64, 3) / binomial(64 + 3 - 1, 3) >= 5);
  CHECK_THROWS_AS(naive_feature_count(0, 1), domain_error);
}

TEST_CASE("crossover context length") {
  CHECK(crossover_context_length(64, 64, 4) == 24327);
  CHECK(crossover_context_length(64, 64, 1) <= 2);
  std::int64_t prev = 0;
  for (int P = 1; P <= 6; ++P) {
    const auto n = crossover_context_length(32, 32, P);
    CHECK(n >= prev);
    prev = n;
  }
  // Exact-division edge: state 130, widths 5+8 = 13, 130/13 = 10 exactly,
  // so the cache first exceeds the state at n = 11.
  CHECK(hidden_state_size_total(5, 9, 2) == 60);
  CHECK(crossover_context_length(5, 9, 2) == 60 / 14 + 1);
}

TEST_CASE("implementation census sits within a constant factor of the model") {
  for (int d : {4, 8, 16, 64}) {
    for (int P : {1, 2, 4}) {
      const auto census = census_update_read(d, d, P);
      const auto model = flops_per_token_total_sum(d, d, P);
      const double ratio = static_cast<double>(census.mul_add) / static_cast<double>(model);
      CHECK(ratio >= 0.8);
      CHECK(ratio <= 1.1);
      CHECK(census.divides == d);
    }
  }
}

TEST_CASE("many small heads hold less state than few large ones") {
  for (int P : {2, 3, 4}) {
    std::int64_t prev = std::numeric_limits<std::int64_t>::max();
    for (int heads : {1, 2, 4, 8}) {
      const int d = 64 / heads;
      const std::int64_t total = heads * hidden_state_size_total(d, d, P);
      CHECK(total < prev);
      prev = total;
    }
  }
}

TEST_CASE("cost report rows") {
  const auto r = build_cost_report(64, 64, 4, 1000000);
  CHECK(r.hidden_state_elements == 3113825);
  CHECK(r.kv_cache_elements == 128000000);
  CHECK(r.flops_per_token == Rational(12738308));
  CHECK(r.crossover_n == 24327);

  const auto multi = build_cost_report(16, 16, 4, 1000, 4);
  CHECK(multi.hidden_state_elements == 4 * hidden_state_size_total(16, 16, 4));
  CHECK(multi.kv_cache_elements == 4 * 1000 * 32);
}
