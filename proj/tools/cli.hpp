#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace symmap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Runs one subcommand. argv[0] is the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace symmap::cli
