#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gradehint/condition.hpp"
#include "gradehint/events.hpp"
#include "gradehint/stats.hpp"

namespace gradehint {

/// Which submissions a metric looks at.
struct TaskFilter {
  enum class Kind { all, hint_enabled, ids };
  Kind kind = Kind::all;
  std::set<std::string> ids;

  static TaskFilter all_tasks() { return {}; }
  /// Tasks whose submissions were logged with hints_enabled.
  static TaskFilter hint_tasks() { return {Kind::hint_enabled, {}}; }
  static TaskFilter only(std::set<std::string> ids) { return {Kind::ids, std::move(ids)}; }

  bool accepts(const SubmissionEvent& s) const;
  /// "all", "hint_enabled" or "ids:a,b".
  std::string label() const;
};

/// Consenting participants and their conditions, taken from
/// participant_enrolled events. Everything else ignores other participants.
std::map<std::string, Condition> enrolled_conditions(std::span<const Event> events);

struct CurvePoint {
  int attempt = 0;
  std::size_t n_submissions = 0;
  std::size_t successes = 0;
  /// Percentage rounded half-up to one decimal.
  double pct = 0;
};

struct AttemptCurve {
  Condition group = Condition::control;
  std::string filter;
  std::vector<CurvePoint> points;
};

inline constexpr int kDefaultMaxAttempt = 15;

/// Point k is the share of successful submissions (score 100) among the
/// group's submissions with attempt_index <= k. Throws Error(no_data) when
/// the group has no submission passing the filter.
AttemptCurve cumulative_success_curve(std::span<const Event> events, const TaskFilter& filter, Condition group,
                                      int max_attempt = kDefaultMaxAttempt);

/// 1000*successes/n rounded half-up, divided by ten.
double one_decimal_pct(std::size_t successes, std::size_t n);

struct SolveDuration {
  std::string participant;
  std::string assignment;
  Condition group = Condition::control;
  std::int64_t seconds = 0;
  bool capped = false;
};

inline constexpr std::int64_t kSolveCapSeconds = 7200;

/// Seconds from the first submission to the first successful one per
/// (participant, assignment), capped. Tasks with fewer than `min_solvers`
/// solvers in either condition are dropped. Sorted by assignment, then
/// participant.
std::vector<SolveDuration> time_to_solve(std::span<const Event> events, std::int64_t cap = kSolveCapSeconds,
                                         std::size_t min_solvers = 3);

struct ClickFraction {
  std::string participant;
  Condition group = Condition::control;
  std::size_t eligible = 0;
  std::size_t clicked = 0;
  double fraction = 0;
};

/// Per participant: share of runtime-error and test-failure submissions
/// with at least one feedback click. Participants with no such submission
/// are left out. Sorted by participant.
std::vector<ClickFraction> feedback_click_fraction(std::span<const Event> events,
                                                   const TaskFilter& filter = TaskFilter::all_tasks());

struct RatingMedian {
  std::string participant;
  Condition group = Condition::control;
  std::size_t ratings = 0;
  double median = 0;
};

std::vector<RatingMedian> rating_medians(std::span<const Event> events);

/// Median bins 1, 1.5, ..., 5, every bin present.
std::vector<std::pair<double, std::size_t>> median_rating_histogram(std::span<const Event> events);

struct AffectRow {
  AffectState state = AffectState::focused;
  double control_median = 0;
  double control_mean = 0;
  double experimental_median = 0;
  double experimental_mean = 0;
  /// Absent for Other, and when either group has no qualifying participant.
  std::optional<StatTestResult> test;
  std::optional<BHRow> bh;
};

struct AffectReport {
  std::size_t min_responses = 3;
  double q = 0.05;
  std::size_t n_control = 0;
  std::size_t n_experimental = 0;
  /// One row per state in survey order, Other last.
  std::vector<AffectRow> rows;
  std::optional<BHDecision> decision;
};

/// Per-participant state fractions over participants with at least
/// `min_responses` answers, compared between groups with Mann-Whitney U
/// (experimental first) and corrected with Benjamini-Hochberg over the five
/// tested states.
AffectReport affect_frequency_report(std::span<const Event> events, std::size_t min_responses = 3, double q = 0.05,
                                     const MwuOptions& mwu = {});

struct TrendFit {
  double intercept = 0;
  double group_effect = 0;
  double attempt_slope = 0;
  double interaction = 0;
  double residual_sse = 0;
};

/// Least squares y = b0 + b1*g + b2*k + b3*g*k over both curves' points,
/// with g = 0 for `a` and 1 for `b`. Throws Error(invalid_argument) when
/// the attempt ranges differ and Error(degenerate_design) for fewer than
/// three points or a single attempt value.
TrendFit fit_group_attempt_trend(const AttemptCurve& a, const AttemptCurve& b);

}  // namespace gradehint
