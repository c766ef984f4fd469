// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>

namespace scvae::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Parses argv and runs one subcommand. Errors are reported on `err` as a
// single "error: ..." line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace scvae::cli
