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

#include "tattn/philox.hpp"

#include <doctest.h>

#include <array>
#include <cmath>

using namespace tattn;

TEST_CASE("published known-answer vectors") {
  // Salmon et al., SC'11 test vectors for philox4x32-10.
  CHECK(Philox4x32::block({0u, 0u, 0u, 0u}, {0u, 0u}) ==
        std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                          {0xffffffffu, 0xffffffffu}) ==
        std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                          {0xa4093822u, 0x299f31d0u}) ==
        std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are deterministic and disjoint") {
  Philox4x32 a(42, 0), b(42, 0), c(42, 1), d(43, 0);
  bool all_equal_c = true, all_equal_d = true;
  for (int i = 0; i < 64; ++i) {
    const auto x = a.next_u32();
    CHECK(x == b.next_u32());
    all_equal_c &= (x == c.next_u32());
    all_equal_d &= (x == d.next_u32());
  }
  CHECK(!all_equal_c);
  CHECK(!all_equal_d);
}

TEST_CASE("uniforms live strictly inside (0, 1)") {
  Philox4x32 rng(1, 0);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.next_uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("inverse normal CDF hits standard quantiles") {
  CHECK(Philox4x32::inverse_normal_cdf(0.5) == 0.0);
  CHECK(Philox4x32::inverse_normal_cdf(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(Philox4x32::inverse_normal_cdf(0.841344746) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(Philox4x32::inverse_normal_cdf(0.001) == doctest::Approx(-3.090232).epsilon(1e-5));
  // Symmetry of the tail branches.
  CHECK(Philox4x32::inverse_normal_cdf(0.01) ==
        doctest::Approx(-Philox4x32::inverse_normal_cdf(0.99)).epsilon(1e-9));
}

TEST_CASE("normal samples have the right first two moments") {
  Philox4x32 rng(7, 3);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.next_normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}
