#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>

#include "gradehint/analytics.hpp"

namespace gradehint {

struct ReportOptions {
  int max_attempt = kDefaultMaxAttempt;
  std::int64_t solve_cap_seconds = kSolveCapSeconds;
  std::size_t min_solvers = 3;
  std::size_t min_affect_responses = 3;
  double q = 0.05;
  MwuOptions mwu;
};

/// The analysis output as file name -> contents: report.json, curves.csv,
/// table1.csv and fig1.csv. A pure function of the event sequence.
struct ReportBundle {
  std::map<std::string, std::string> files;

  /// Throws Error(not_found) for a name outside the bundle.
  const std::string& file(const std::string& name) const;
};

ReportBundle build_report(std::span<const Event> events, const ReportOptions& options = {});

/// Creates `dir` if needed and writes every file of the bundle.
void write_report(const std::filesystem::path& dir, const ReportBundle& bundle);

}  // namespace gradehint
