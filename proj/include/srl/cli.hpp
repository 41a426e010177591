// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: synth, train, eval, rollout, ablate, gradcheck.
//
// Exit codes: 0 success, 1 failed check (or internal error), 2 invalid
// configuration or input, 3 numeric abort.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace srl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

/// `args` excludes the program name. JSONL logs go to `out` unless
/// --log-file is given; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace srl
