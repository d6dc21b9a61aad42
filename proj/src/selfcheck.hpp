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

#ifndef TATTN_BENCH_SELFCHECK_HPP
#define TATTN_BENCH_SELFCHECK_HPP

#include <string>
#include <vector>

namespace tattn::selfcheck {

// End-to-end verification suite. Each check is self-contained, pins its own
// seeds and tolerances, and reports the measured figures alongside pass or
// fail. `selftest` runs the desk-scale subset (checks 1-3 and 5-7); the
// acceptance binary runs everything.

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  std::string detail;
};

CheckResult check_basis_counts();            // 1
CheckResult check_polynomial_identity();     // 2
CheckResult check_kernel_path_equivalence(); // 3
CheckResult check_oracle_convergence();      // 4
CheckResult check_scan_stream_equivalence(); // 5
CheckResult check_constant_state();          // 6
CheckResult check_cost_model();              // 7
CheckResult check_scaling_shape();           // 8
/// 9: runs `cli_path selftest` as a subprocess and requires exit 0 in time.
CheckResult check_selftest_command(const std::string& cli_path);

/// Checks 1-3 and 5-7, in order.
std::vector<CheckResult> run_selftest();

/// One line per result on stdout; returns true when everything passed.
bool report(const std::vector<CheckResult>& results);

}  // namespace tattn::selfcheck

#endif  // TATTN_BENCH_SELFCHECK_HPP
