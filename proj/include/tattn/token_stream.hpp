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

#ifndef TATTN_TOKEN_STREAM_HPP
#define TATTN_TOKEN_STREAM_HPP

#include "tattn/errors.hpp"
#include "tattn/tokens.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

namespace tattn {

// Binary token stream. Little-endian throughout:
//   magic  'S' 'A' 'T' 'A'
//   u16    format version (currently 1)
//   u16    d_K
//   u16    d_V
//   u64    token count
// followed by one record per token: d_K query doubles, d_K key doubles,
// d_V value doubles.

inline constexpr std::array<char, 4> kTokenStreamMagic = {'S', 'A', 'T', 'A'};
inline constexpr std::uint16_t kTokenStreamVersion = 1;

namespace detail {

template <typename T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_integral_v<T> && std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    os.put(static_cast<char>((value >> (8 * i)) & 0xff));
}

template <typename T>
T read_le(std::istream& is) {
  static_assert(std::is_integral_v<T> && std::is_unsigned_v<T>);
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw domain_error("token stream: truncated header");
    value |= static_cast<T>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return value;
}

inline void write_f64_le(std::ostream& os, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, sizeof(bits));
  write_le<std::uint64_t>(os, bits);
}

inline double read_f64_le(std::istream& is) {
  const std::uint64_t bits = read_le<std::uint64_t>(is);
  double x;
  std::memcpy(&x, &bits, sizeof(x));
  return x;
}

}  // namespace detail

inline void write_token_stream(std::ostream& os, const TokenBatch& tokens) {
  tokens.validate();
  if (tokens.key_width() > 0xffff || tokens.value_width() > 0xffff)
    throw domain_error("token stream: width exceeds format range");
  os.write(kTokenStreamMagic.data(), kTokenStreamMagic.size());
  detail::write_le<std::uint16_t>(os, kTokenStreamVersion);
  detail::write_le<std::uint16_t>(os, static_cast<std::uint16_t>(tokens.key_width()));
  detail::write_le<std::uint16_t>(os, static_cast<std::uint16_t>(tokens.value_width()));
  detail::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(tokens.size()));
  for (std::int64_t t = 0; t < tokens.size(); ++t) {
    for (int j = 0; j < tokens.key_width(); ++j) detail::write_f64_le(os, tokens.queries(t, j));
    for (int j = 0; j < tokens.key_width(); ++j) detail::write_f64_le(os, tokens.keys(t, j));
    for (int j = 0; j < tokens.value_width(); ++j) detail::write_f64_le(os, tokens.values(t, j));
  }
  if (!os) throw domain_error("token stream: write failed");
}

inline TokenBatch read_token_stream(std::istream& is) {
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kTokenStreamMagic) throw domain_error("token stream: bad magic");
  const auto version = detail::read_le<std::uint16_t>(is);
  if (version != kTokenStreamVersion)
    throw domain_error("token stream: unsupported version " + std::to_string(version));
  const int d_k = detail::read_le<std::uint16_t>(is);
  const int d_v = detail::read_le<std::uint16_t>(is);
  const auto count = detail::read_le<std::uint64_t>(is);
  if (d_k < 1 || d_v < 1) throw domain_error("token stream: widths must be >= 1");

  TokenBatch tokens;
  tokens.queries.resize(static_cast<Eigen::Index>(count), d_k);
  tokens.keys.resize(static_cast<Eigen::Index>(count), d_k);
  tokens.values.resize(static_cast<Eigen::Index>(count), d_v);
  for (std::uint64_t t = 0; t < count; ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    for (int j = 0; j < d_k; ++j) tokens.queries(row, j) = detail::read_f64_le(is);
    for (int j = 0; j < d_k; ++j) tokens.keys(row, j) = detail::read_f64_le(is);
    for (int j = 0; j < d_v; ++j) tokens.values(row, j) = detail::read_f64_le(is);
  }
  if (!is) throw domain_error("token stream: truncated records");
  return tokens;
}

}  // namespace tattn

#endif  // TATTN_TOKEN_STREAM_HPP
