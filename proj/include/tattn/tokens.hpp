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

#ifndef TATTN_TOKENS_HPP
#define TATTN_TOKENS_HPP

#include "tattn/errors.hpp"

#include <Eigen/Core>

#include <cstdint>

namespace tattn {

/// One token's query, key, and value.
struct TokenTriple {
  Eigen::VectorXd query;
  Eigen::VectorXd key;
  Eigen::VectorXd value;
};

/// A token sequence in struct-of-arrays form: row t holds token t.
struct TokenBatch {
  Eigen::MatrixXd queries;  // n x d_K
  Eigen::MatrixXd keys;     // n x d_K
  Eigen::MatrixXd values;   // n x d_V

  std::int64_t size() const { return queries.rows(); }
  int key_width() const { return static_cast<int>(keys.cols()); }
  int value_width() const { return static_cast<int>(values.cols()); }

  TokenTriple token(std::int64_t t) const {
    return {queries.row(t).transpose(), keys.row(t).transpose(), values.row(t).transpose()};
  }

  void validate() const {
    if (queries.rows() != keys.rows() || queries.rows() != values.rows())
      throw domain_error("TokenBatch: query/key/value token counts differ");
    if (queries.cols() != keys.cols())
      throw domain_error("TokenBatch: query and key widths differ");
  }
};

}  // namespace tattn

#endif  // TATTN_TOKENS_HPP
