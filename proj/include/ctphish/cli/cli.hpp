#pragma once

#include <atomic>
#include <ostream>
#include <string>
#include <vector>

namespace ctphish::cli {

inline constexpr int k_exit_ok = 0;
inline constexpr int k_exit_error = 1;
inline constexpr int k_exit_usage = 2;

/// Entry point of the ctphish executable. Installs SIGINT/SIGTERM handlers
/// that raise stop_flag().
int run(int argc, char** argv);

/// Same dispatch without signal handlers; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Stops live classification and the fixture server.
std::atomic<bool>& stop_flag();

}  // namespace ctphish::cli
