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

#ifndef TATTN_COMBINATORICS_HPP
#define TATTN_COMBINATORICS_HPP

#include "tattn/errors.hpp"

#include <cstdint>
#include <limits>

namespace tattn {

// Exact 64-bit integer combinatorics. Everything here throws
// tattn::overflow_error instead of wrapping; counts in this library are
// meaningful only while they are exact.

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw overflow_error("integer add overflow");
  return r;
}

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw overflow_error("integer multiply overflow");
  return r;
}

/// C(n, k), exact. The running value stays integral at every step because a
/// product of i consecutive integers is divisible by i!.
inline std::int64_t binomial(std::int64_t n, std::int64_t k) {
  if (n < 0 || k < 0) throw domain_error("binomial requires n, k >= 0");
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  __int128 r = 1;
  for (std::int64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > std::numeric_limits<std::int64_t>::max())
      throw overflow_error("binomial coefficient exceeds 64-bit range");
  }
  return static_cast<std::int64_t>(r);
}

/// base^exp, exact.
inline std::int64_t ipow(std::int64_t base, std::int64_t exp) {
  if (exp < 0) throw domain_error("ipow requires exp >= 0");
  std::int64_t r = 1;
  for (std::int64_t i = 0; i < exp; ++i) r = checked_mul(r, base);
  return r;
}

}  // namespace tattn

#endif  // TATTN_COMBINATORICS_HPP
