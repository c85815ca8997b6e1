#pragma once
// Reference implementations used to check the library. Deliberately naive.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "gradehint/events.hpp"

namespace oracle {

inline double pairwise_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0;
  for (double x : a)
    for (double y : b) u += x > y ? 1.0 : x == y ? 0.5 : 0.0;
  return u;
}

/// Two-sided p by trying every distinct split of the pooled values.
inline double brute_force_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const double centre = a.size() * b.size() / 2.0;
  const double observed = std::abs(pairwise_u(a, b) - centre);
  std::vector<int> labels(pooled.size(), 1);
  std::fill(labels.begin(), labels.begin() + static_cast<long>(b.size()), 0);  // sorted: 0s then 1s
  long total = 0, extreme = 0;
  do {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < pooled.size(); ++i) (labels[i] ? x : y).push_back(pooled[i]);
    if (std::abs(pairwise_u(x, y) - centre) >= observed - 1e-9) ++extreme;
    ++total;
  } while (std::next_permutation(labels.begin(), labels.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

struct CurveCount {
  long n = 0;
  long successes = 0;
  /// Percentage in tenths, rounded half up.
  long tenths = 0;
};

/// Cumulative success counts per attempt cap, straight from the events.
inline std::vector<CurveCount> curve(const std::vector<gradehint::Event>& events, gradehint::Condition group,
                                     bool hint_tasks_only, int max_attempt) {
  using namespace gradehint;
  std::map<std::string, Condition> consenting;
  for (const auto& e : events)
    if (auto* p = std::get_if<ParticipantEnrolled>(&e.payload); p && p->consent) consenting[p->participant] = p->condition;
  std::vector<CurveCount> out;
  for (int k = 1; k <= max_attempt; ++k) {
    CurveCount c;
    for (const auto& e : events) {
      auto* s = std::get_if<SubmissionEvent>(&e.payload);
      if (!s || s->attempt_index > k) continue;
      auto it = consenting.find(s->participant);
      if (it == consenting.end() || it->second != group) continue;
      if (hint_tasks_only && !s->hints_enabled) continue;
      ++c.n;
      c.successes += s->score == 100.0;
    }
    c.tenths = c.n ? (2000 * c.successes + c.n) / (2 * c.n) : 0;
    out.push_back(c);
  }
  return out;
}

}  // namespace oracle
