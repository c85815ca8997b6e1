#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

namespace gradehint::process {

struct Result {
  int exit_code = -1;
  /// stdout and stderr, interleaved in arrival order.
  std::string output;
  bool timed_out = false;
};

/// Runs argv[0] (looked up on PATH) in `cwd`, feeding `input` on stdin.
/// The whole process group is killed once `timeout` elapses. Throws
/// Error(backend_unavailable) when the program cannot be started.
Result run(const std::vector<std::string>& argv, const std::string& input, std::chrono::milliseconds timeout,
           const std::filesystem::path& cwd = {});

/// True when `program` contains a slash and is executable, or is found on PATH.
bool on_path(const std::string& program);

}  // namespace gradehint::process
