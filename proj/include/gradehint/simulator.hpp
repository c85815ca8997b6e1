#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "gradehint/experiment.hpp"
#include "gradehint/report.hpp"

namespace gradehint {

/// Source texts a scripted student can submit for one assignment. Missing
/// variants fall back to `failing`, then to `correct`.
struct CodeVariants {
  std::string correct;
  std::optional<std::string> failing;
  std::optional<std::string> compile_error;
  std::optional<std::string> runtime_error;
};

/// Reads `<bundle>/<id>/variants/{correct,failing,compile_error,runtime_error}.cs`
/// for every assignment directory that has a `correct.cs`.
std::map<std::string, CodeVariants> load_code_variants(const std::filesystem::path& bundle_dir);

struct SimulationConfig {
  int students = 20;
  std::uint64_t seed = 1;
  int max_attempts = 8;
  /// Per-attempt success probability is skill + learning * (attempt - 1),
  /// capped at 0.97. Skill is drawn uniformly from [skill_min, skill_max].
  double skill_min = 0.25;
  double skill_max = 0.75;
  double learning = 0.12;
  /// Extra success probability on the attempt after a shown hint.
  double hint_bonus = 0.05;
  double click_probability = 0.6;
  double affect_answer_probability = 0.9;
  /// Chance of a long break (three hours) before an attempt.
  double long_break_probability = 0.03;
};

struct SimulationSummary {
  int participants = 0;
  int submissions = 0;
  int hints_shown = 0;
  int ratings = 0;
  int clicks = 0;
  int affect_responses = 0;
};

/// Drives a cohort of scripted students through every assignment that has
/// code variants. Test scaffolding with seeded behaviour; not a model of
/// real students. The platform must use `clock`, which is advanced between
/// actions.
SimulationSummary simulate_cohort(Platform& platform, ManualClock& clock,
                                  const std::map<std::string, CodeVariants>& variants, const SimulationConfig& config);

struct SimulationRun {
  SimulationSummary summary;
  std::vector<Event> events;
  /// Report built from the live log before it is closed.
  ReportBundle online_report;
};

/// Loads the bundle and its code variants, runs a cohort against the mock
/// backend and the mock completion client on a manual clock starting at
/// 2023-03-01T08:00:00Z, and optionally writes the log to `log_path`
/// (which must not exist yet).
SimulationRun run_simulation(const std::filesystem::path& bundle_dir, const SimulationConfig& config,
                             const std::optional<std::filesystem::path>& log_path = std::nullopt,
                             const ReportOptions& report_options = {});

}  // namespace gradehint
