#include "gradehint/analytics.hpp"

#include <algorithm>
#include <chrono>

#include <fmt/format.h>

#include "gradehint/error.hpp"

namespace gradehint {

bool TaskFilter::accepts(const SubmissionEvent& s) const {
  switch (kind) {
    case Kind::all: return true;
    case Kind::hint_enabled: return s.hints_enabled;
    case Kind::ids: return ids.contains(s.assignment);
  }
  return false;
}

std::string TaskFilter::label() const {
  switch (kind) {
    case Kind::all: return "all";
    case Kind::hint_enabled: return "hint_enabled";
    case Kind::ids: {
      std::string out = "ids:";
      bool first = true;
      for (const auto& id : ids) {
        if (!first) out += ',';
        out += id;
        first = false;
      }
      return out;
    }
  }
  return "all";
}

std::map<std::string, Condition> enrolled_conditions(std::span<const Event> events) {
  std::map<std::string, Condition> out;
  for (const auto& e : events) {
    if (auto* p = std::get_if<ParticipantEnrolled>(&e.payload)) {
      if (p->consent) out[p->participant] = p->condition;
      else out.erase(p->participant);
    }
  }
  return out;
}

namespace {

bool is_success(const SubmissionEvent& s) { return s.score == 100.0; }

}  // namespace

double one_decimal_pct(std::size_t successes, std::size_t n) {
  if (n == 0) fail(Errc::no_data, "no submissions");
  // floor(1000*s/n + 1/2) in integers.
  const unsigned long long tenths = (2000ULL * successes + n) / (2ULL * n);
  return static_cast<double>(tenths) / 10.0;
}

AttemptCurve cumulative_success_curve(std::span<const Event> events, const TaskFilter& filter, Condition group,
                                      int max_attempt) {
  if (max_attempt < 1) fail(Errc::invalid_argument, "max_attempt must be at least 1");
  auto who = enrolled_conditions(events);
  std::vector<std::size_t> total(max_attempt + 1, 0), ok(max_attempt + 1, 0);
  std::size_t seen = 0;
  for (const auto& e : events) {
    auto* s = std::get_if<SubmissionEvent>(&e.payload);
    if (!s || !filter.accepts(*s)) continue;
    auto it = who.find(s->participant);
    if (it == who.end() || it->second != group) continue;
    ++seen;
    if (s->attempt_index > max_attempt) continue;
    ++total[s->attempt_index];
    if (is_success(*s)) ++ok[s->attempt_index];
  }
  if (seen == 0)
    fail(Errc::no_data,
         fmt::format("no {} submissions for task filter '{}'", to_string(group), filter.label()));
  AttemptCurve curve;
  curve.group = group;
  curve.filter = filter.label();
  std::size_t n = 0, s = 0;
  for (int k = 1; k <= max_attempt; ++k) {
    n += total[k];
    s += ok[k];
    if (n == 0) continue;
    curve.points.push_back({k, n, s, one_decimal_pct(s, n)});
  }
  return curve;
}

std::vector<SolveDuration> time_to_solve(std::span<const Event> events, std::int64_t cap, std::size_t min_solvers) {
  if (cap < 0) fail(Errc::invalid_argument, "cap must be non-negative");
  auto who = enrolled_conditions(events);
  struct Span {
    Timestamp first;
    std::optional<Timestamp> solved;
  };
  std::map<std::pair<std::string, std::string>, Span> spans;  // (assignment, participant)
  for (const auto& e : events) {
    auto* s = std::get_if<SubmissionEvent>(&e.payload);
    if (!s || !who.contains(s->participant)) continue;
    auto [it, fresh] = spans.try_emplace({s->assignment, s->participant}, Span{e.ts, std::nullopt});
    if (!it->second.solved && is_success(*s)) it->second.solved = e.ts;
  }

  std::map<std::string, std::pair<std::size_t, std::size_t>> solvers;  // assignment -> (control, experimental)
  for (const auto& [key, span] : spans) {
    if (!span.solved) continue;
    auto& counts = solvers[key.first];
    (who.at(key.second) == Condition::control ? counts.first : counts.second)++;
  }

  std::vector<SolveDuration> out;
  for (const auto& [key, span] : spans) {
    if (!span.solved) continue;
    auto counts = solvers.at(key.first);
    if (counts.first < min_solvers || counts.second < min_solvers) continue;
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(*span.solved - span.first).count();
    SolveDuration d{key.second, key.first, who.at(key.second), std::min(secs, cap), secs > cap};
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<ClickFraction> feedback_click_fraction(std::span<const Event> events, const TaskFilter& filter) {
  auto who = enrolled_conditions(events);
  std::map<std::string, std::string> owner;  // eligible submission -> participant
  std::set<std::string> clicked;
  for (const auto& e : events) {
    if (auto* s = std::get_if<SubmissionEvent>(&e.payload)) {
      if (!who.contains(s->participant) || !filter.accepts(*s)) continue;
      if (s->outcome == OutcomeClass::runtime_error || s->outcome == OutcomeClass::test_failure)
        owner[s->submission_id] = s->participant;
    } else if (auto* c = std::get_if<FeedbackClick>(&e.payload)) {
      clicked.insert(c->submission_id);
    }
  }
  std::map<std::string, ClickFraction> per;
  for (const auto& [sid, participant] : owner) {
    auto& row = per[participant];
    row.participant = participant;
    row.group = who.at(participant);
    ++row.eligible;
    if (clicked.contains(sid)) ++row.clicked;
  }
  std::vector<ClickFraction> out;
  for (auto& [_, row] : per) {
    row.fraction = static_cast<double>(row.clicked) / static_cast<double>(row.eligible);
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<RatingMedian> rating_medians(std::span<const Event> events) {
  auto who = enrolled_conditions(events);
  std::map<std::string, std::vector<double>> values;
  for (const auto& e : events) {
    if (auto* r = std::get_if<HintRating>(&e.payload))
      if (who.contains(r->participant)) values[r->participant].push_back(r->value);
  }
  std::vector<RatingMedian> out;
  for (auto& [p, v] : values) out.push_back({p, who.at(p), v.size(), median(v)});
  return out;
}

std::vector<std::pair<double, std::size_t>> median_rating_histogram(std::span<const Event> events) {
  std::vector<std::pair<double, std::size_t>> bins;
  for (int half = 2; half <= 10; ++half) bins.emplace_back(half / 2.0, 0);
  for (const auto& m : rating_medians(events)) {
    // Medians of integer ratings are whole or half values in [1,5].
    auto idx = static_cast<std::size_t>(m.median * 2 + 0.5) - 2;
    if (idx >= bins.size()) fail(Errc::invariant_violation, fmt::format("rating median {} out of range", m.median));
    ++bins[idx].second;
  }
  return bins;
}

AffectReport affect_frequency_report(std::span<const Event> events, std::size_t min_responses, double q,
                                     const MwuOptions& mwu) {
  if (!(q > 0 && q < 1)) fail(Errc::invalid_q, fmt::format("q={} is outside (0,1)", q));
  auto who = enrolled_conditions(events);
  std::map<std::string, std::array<std::size_t, kAffectStates.size()>> counts;
  for (const auto& e : events) {
    if (auto* r = std::get_if<AffectResponse>(&e.payload)) {
      if (!who.contains(r->participant)) continue;
      auto& c = counts.try_emplace(r->participant).first->second;
      ++c[static_cast<std::size_t>(r->state)];
    }
  }

  AffectReport rep;
  rep.min_responses = min_responses;
  rep.q = q;
  // fractions[state] per group
  std::array<std::vector<double>, kAffectStates.size()> ctrl, expt;
  for (const auto& [p, c] : counts) {
    std::size_t n = 0;
    for (auto v : c) n += v;
    if (n < min_responses || n == 0) continue;
    bool is_expt = who.at(p) == Condition::experimental;
    (is_expt ? rep.n_experimental : rep.n_control)++;
    for (std::size_t s = 0; s < c.size(); ++s)
      (is_expt ? expt : ctrl)[s].push_back(static_cast<double>(c[s]) / static_cast<double>(n));
  }

  std::vector<LabeledP> tested;
  for (auto st : kAffectStates) {
    auto s = static_cast<std::size_t>(st);
    AffectRow row;
    row.state = st;
    if (!ctrl[s].empty()) {
      row.control_median = median(ctrl[s]);
      row.control_mean = mean(ctrl[s]);
    }
    if (!expt[s].empty()) {
      row.experimental_median = median(expt[s]);
      row.experimental_mean = mean(expt[s]);
    }
    if (st != AffectState::other && !ctrl[s].empty() && !expt[s].empty()) {
      row.test = mann_whitney_u(expt[s], ctrl[s], mwu);
      tested.push_back({std::string(to_string(st)), row.test->p_value});
    }
    rep.rows.push_back(std::move(row));
  }
  // Survey order puts Other last already.
  if (!tested.empty()) {
    rep.decision = benjamini_hochberg(tested, q);
    for (const auto& r : rep.decision->ranked)
      for (auto& row : rep.rows)
        if (to_string(row.state) == r.label) row.bh = r;
  }
  return rep;
}

TrendFit fit_group_attempt_trend(const AttemptCurve& a, const AttemptCurve& b) {
  auto xs = [](const AttemptCurve& c) {
    std::vector<double> x, y;
    for (const auto& p : c.points) {
      x.push_back(p.attempt);
      y.push_back(p.pct);
    }
    return std::pair{x, y};
  };
  auto [xa, ya] = xs(a);
  auto [xb, yb] = xs(b);
  if (xa.size() < 3 || xb.size() < 3) fail(Errc::degenerate_design, "each curve needs at least three points");
  if (xa != xb) fail(Errc::invalid_argument, "curves cover different attempt ranges");
  // With a full interaction term the joint fit splits into one line per group.
  LineFit fa = fit_line(xa, ya);
  LineFit fb = fit_line(xb, yb);
  TrendFit t;
  t.intercept = fa.intercept;
  t.group_effect = fb.intercept - fa.intercept;
  t.attempt_slope = fa.slope;
  t.interaction = fb.slope - fa.slope;
  t.residual_sse = fa.sse + fb.sse;
  return t;
}

}  // namespace gradehint
