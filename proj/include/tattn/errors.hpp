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

#ifndef TATTN_ERRORS_HPP
#define TATTN_ERRORS_HPP

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tattn {

/// Invalid argument values or mismatched dimensions.
class domain_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exact integer arithmetic left the 64-bit range.
class overflow_error : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// A configuration would allocate more accumulator elements than the budget allows.
class budget_error : public std::runtime_error {
 public:
  budget_error(std::int64_t requested, std::int64_t budget)
      : std::runtime_error("element budget exceeded: " + std::to_string(requested) +
                           " elements requested, budget is " + std::to_string(budget)),
        requested_elements(requested),
        budget_elements(budget) {}

  std::int64_t requested_elements;
  std::int64_t budget_elements;
};

/// Readout requested before any token was accumulated.
class empty_context_error : public std::runtime_error {
 public:
  empty_context_error() : std::runtime_error("attention readout over empty context") {}
};

/// The truncated-kernel normalizer fell below the guard threshold.
/// Carries the aggregated numerator and denominator so callers can diagnose
/// whether truncation drove the normalizer negative or near zero.
class degenerate_denominator_error : public std::runtime_error {
 public:
  degenerate_denominator_error(double denom, Eigen::VectorXd numer, std::int64_t tokens)
      : std::runtime_error("degenerate attention denominator " + std::to_string(denom) +
                           " after " + std::to_string(tokens) + " tokens"),
        denominator(denom),
        numerator(std::move(numer)),
        token_count(tokens) {}

  double denominator;
  Eigen::VectorXd numerator;
  std::int64_t token_count;
  std::int64_t token_index = -1;  // set by sequence drivers when known
};

}  // namespace tattn

#endif  // TATTN_ERRORS_HPP
