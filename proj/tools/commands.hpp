#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace taib::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Parses argv-style arguments (without the program name) and runs the
/// selected subcommand. Returns 0 on success, 1 on validation errors and
/// 2 on usage errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace taib::cli
