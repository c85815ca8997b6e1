#include "gradehint/report.hpp"

#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "gradehint/error.hpp"

namespace gradehint {

using ojson = nlohmann::ordered_json;

const std::string& ReportBundle::file(const std::string& name) const {
  auto it = files.find(name);
  if (it == files.end()) fail(Errc::not_found, fmt::format("report has no file '{}'", name));
  return it->second;
}

namespace {

ojson empty_family(std::string reason) { return ojson{{"status", "empty"}, {"reason", std::move(reason)}}; }

ojson summary(const std::vector<double>& v) {
  if (v.empty()) return ojson{{"n", 0}};
  return ojson{{"n", v.size()}, {"median", median(v)}, {"mean", mean(v)}};
}

ojson test_json(const StatTestResult& t) {
  return ojson{{"W", t.statistic}, {"p", t.p_value},         {"n_experimental", t.n_a},
               {"n_control", t.n_b}, {"method", to_string(t.method)}};
}

/// Groups, summaries and an experimental-vs-control test when both sides
/// have data.
ojson compare(const std::vector<double>& expt, const std::vector<double>& ctrl, const MwuOptions& mwu) {
  ojson j;
  j["groups"] = ojson{{"control", summary(ctrl)}, {"experimental", summary(expt)}};
  if (!expt.empty() && !ctrl.empty()) j["test"] = test_json(mann_whitney_u(expt, ctrl, mwu));
  else j["test"] = empty_family("a group has no data");
  return j;
}

ojson pretest_family(std::span<const Event> events, const ReportOptions& o) {
  std::vector<double> ctrl, expt;
  for (const auto& e : events)
    if (auto* p = std::get_if<ParticipantEnrolled>(&e.payload); p && p->consent)
      (p->condition == Condition::experimental ? expt : ctrl).push_back(p->pretest_score);
  if (ctrl.empty() && expt.empty()) return empty_family("no enrolled participants");
  ojson j{{"status", "ok"}};
  j.update(compare(expt, ctrl, o.mwu));
  return j;
}

ojson hint_rating_family(std::span<const Event> events) {
  auto medians = rating_medians(events);
  if (medians.empty()) return empty_family("no hint ratings");
  ojson j{{"status", "ok"}};
  ojson per = ojson::array();
  for (const auto& m : medians)
    per.push_back(ojson{{"participant", m.participant}, {"group", to_string(m.group)}, {"ratings", m.ratings},
                        {"median", m.median}});
  ojson hist = ojson::array();
  for (const auto& [bin, count] : median_rating_histogram(events))
    hist.push_back(ojson{{"median", bin}, {"participants", count}});
  std::vector<double> all;
  for (const auto& m : medians) all.push_back(m.median);
  j["participants"] = medians.size();
  j["median_of_medians"] = median(all);
  j["histogram"] = std::move(hist);
  j["per_participant"] = std::move(per);
  return j;
}

ojson click_family(std::span<const Event> events, const ReportOptions& o) {
  auto rows = feedback_click_fraction(events);
  if (rows.empty()) return empty_family("no runtime-error or test-failure submissions");
  std::vector<double> ctrl, expt;
  ojson per = ojson::array();
  for (const auto& r : rows) {
    (r.group == Condition::experimental ? expt : ctrl).push_back(r.fraction);
    per.push_back(ojson{{"participant", r.participant}, {"group", to_string(r.group)}, {"eligible", r.eligible},
                        {"clicked", r.clicked}, {"fraction", r.fraction}});
  }
  ojson j{{"status", "ok"}};
  j.update(compare(expt, ctrl, o.mwu));
  j["per_participant"] = std::move(per);
  return j;
}

ojson curve_json(const AttemptCurve& c) {
  ojson pts = ojson::array();
  for (const auto& p : c.points)
    pts.push_back(ojson{{"attempt", p.attempt}, {"n_submissions", p.n_submissions}, {"successes", p.successes},
                        {"pct", p.pct}});
  return ojson{{"status", "ok"}, {"points", std::move(pts)}};
}

struct CurvePair {
  std::optional<AttemptCurve> control, experimental;
};

std::optional<AttemptCurve> try_curve(std::span<const Event> events, const TaskFilter& f, Condition g, int k) {
  try {
    return cumulative_success_curve(events, f, g, k);
  } catch (const Error& e) {
    if (e.code() != Errc::no_data) throw;
    return std::nullopt;
  }
}

ojson curve_family(std::span<const Event> events, const ReportOptions& o, std::vector<CurvePair>& pairs,
                   std::vector<TaskFilter>& filters) {
  filters = {TaskFilter::all_tasks(), TaskFilter::hint_tasks()};
  bool any = false;
  ojson by_filter;
  for (const auto& f : filters) {
    CurvePair cp{try_curve(events, f, Condition::control, o.max_attempt),
                 try_curve(events, f, Condition::experimental, o.max_attempt)};
    any = any || cp.control || cp.experimental;
    ojson j;
    j["control"] = cp.control ? curve_json(*cp.control) : empty_family("no submissions");
    j["experimental"] = cp.experimental ? curve_json(*cp.experimental) : empty_family("no submissions");
    if (cp.control && cp.experimental) {
      try {
        auto t = fit_group_attempt_trend(*cp.control, *cp.experimental);
        j["trend"] = ojson{{"status", "ok"},
                           {"model", "ols: pct ~ 1 + group + attempt + group:attempt, group=1 for experimental"},
                           {"intercept", t.intercept},
                           {"group_effect", t.group_effect},
                           {"attempt_slope", t.attempt_slope},
                           {"interaction", t.interaction},
                           {"residual_sse", t.residual_sse}};
      } catch (const Error& e) {
        if (e.code() != Errc::degenerate_design && e.code() != Errc::invalid_argument) throw;
        j["trend"] = empty_family(e.what());
      }
    } else {
      j["trend"] = empty_family("a group has no submissions");
    }
    by_filter[f.label()] = std::move(j);
    pairs.push_back(std::move(cp));
  }
  if (!any) return empty_family("no submissions");
  ojson j{{"status", "ok"}, {"max_attempt", o.max_attempt}};
  j["filters"] = std::move(by_filter);
  return j;
}

ojson solve_family(std::span<const Event> events, const ReportOptions& o) {
  auto d = time_to_solve(events, o.solve_cap_seconds, o.min_solvers);
  if (d.empty()) return empty_family("no task has enough solvers in both conditions");
  std::vector<double> ctrl, expt;
  std::size_t capped = 0;
  std::set<std::string> tasks;
  ojson rows = ojson::array();
  for (const auto& s : d) {
    (s.group == Condition::experimental ? expt : ctrl).push_back(static_cast<double>(s.seconds));
    capped += s.capped;
    tasks.insert(s.assignment);
    rows.push_back(ojson{{"assignment", s.assignment}, {"participant", s.participant},
                         {"group", to_string(s.group)}, {"seconds", s.seconds}, {"capped", s.capped}});
  }
  ojson j{{"status", "ok"}, {"cap_seconds", o.solve_cap_seconds}, {"min_solvers", o.min_solvers},
          {"tasks", tasks.size()}, {"capped", capped}};
  j.update(compare(expt, ctrl, o.mwu));
  j["durations"] = std::move(rows);
  return j;
}

ojson affect_family(const AffectReport& rep) {
  if (rep.n_control + rep.n_experimental == 0)
    return empty_family(fmt::format("no participant with at least {} affect responses", rep.min_responses));
  ojson rows = ojson::array();
  for (const auto& r : rep.rows) {
    ojson row{{"state", to_string(r.state)},
              {"control", ojson{{"median", r.control_median}, {"mean", r.control_mean}}},
              {"experimental", ojson{{"median", r.experimental_median}, {"mean", r.experimental_mean}}}};
    if (r.test) row["test"] = test_json(*r.test);
    else row["test"] = empty_family(r.state == AffectState::other ? "not tested" : "a group has no data");
    if (r.bh)
      row["bh"] = ojson{{"rank", r.bh->rank}, {"threshold", r.bh->threshold}, {"rejected", r.bh->rejected}};
    rows.push_back(std::move(row));
  }
  return ojson{{"status", "ok"},
               {"min_responses", rep.min_responses},
               {"q", rep.q},
               {"n_control", rep.n_control},
               {"n_experimental", rep.n_experimental},
               {"rejections", rep.decision ? rep.decision->rejections() : 0},
               {"rows", std::move(rows)}};
}

std::string num(double v) { return fmt::format("{}", v); }

}  // namespace

ReportBundle build_report(std::span<const Event> events, const ReportOptions& o) {
  auto who = enrolled_conditions(events);
  std::size_t n_ctrl = 0, n_expt = 0;
  for (const auto& [_, c] : who) (c == Condition::experimental ? n_expt : n_ctrl)++;

  std::vector<CurvePair> pairs;
  std::vector<TaskFilter> filters;
  AffectReport affect = affect_frequency_report(events, o.min_affect_responses, o.q, o.mwu);

  ojson j;
  j["format"] = "gradehint-report/1";
  j["events"] = events.size();
  j["participants"] = ojson{{"control", n_ctrl}, {"experimental", n_expt}};
  j["pretest"] = pretest_family(events, o);
  j["hint_ratings"] = hint_rating_family(events);
  j["feedback_clicks"] = click_family(events, o);
  j["success_curves"] = curve_family(events, o, pairs, filters);
  j["time_to_solve"] = solve_family(events, o);
  j["affect"] = affect_family(affect);

  ReportBundle b;
  b.files["report.json"] = j.dump(2) + "\n";

  std::string curves = "filter,group,attempt,n_submissions,successes,success_pct\n";
  for (std::size_t i = 0; i < filters.size(); ++i) {
    for (const auto* c : {&pairs[i].control, &pairs[i].experimental}) {
      if (!*c) continue;
      for (const auto& p : (*c)->points)
        curves += fmt::format("{},{},{},{},{},{:.1f}\n", (*c)->filter, to_string((*c)->group), p.attempt,
                              p.n_submissions, p.successes, p.pct);
    }
  }
  b.files["curves.csv"] = std::move(curves);

  std::string table =
      "state,control_mdn,control_mean,experimental_mdn,experimental_mean,W,p,method,bh_rank,bh_threshold,"
      "bh_rejected\n";
  if (affect.n_control + affect.n_experimental > 0) {
    for (const auto& r : affect.rows) {
      table += fmt::format("{},{},{},{},{}", to_string(r.state), num(r.control_median), num(r.control_mean),
                           num(r.experimental_median), num(r.experimental_mean));
      if (r.test) table += fmt::format(",{},{},{}", num(r.test->statistic), num(r.test->p_value), to_string(r.test->method));
      else table += ",,,";
      if (r.bh) table += fmt::format(",{},{},{}\n", r.bh->rank, num(r.bh->threshold), r.bh->rejected ? "true" : "false");
      else table += ",,,\n";
    }
  }
  b.files["table1.csv"] = std::move(table);

  std::string fig = "median_rating,participants\n";
  for (const auto& [bin, count] : median_rating_histogram(events)) fig += fmt::format("{:.1f},{}\n", bin, count);
  b.files["fig1.csv"] = std::move(fig);
  return b;
}

void write_report(const std::filesystem::path& dir, const ReportBundle& bundle) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, body] : bundle.files) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out << body;
    if (!out) fail(Errc::invalid_argument, fmt::format("cannot write {}", (dir / name).string()));
  }
}

}  // namespace gradehint
