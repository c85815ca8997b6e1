#include "gradehint/simulator.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "gradehint/error.hpp"

namespace gradehint {
namespace fs = std::filesystem;

namespace {

std::optional<std::string> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::map<std::string, CodeVariants> load_code_variants(const fs::path& bundle_dir) {
  std::map<std::string, CodeVariants> out;
  if (!fs::is_directory(bundle_dir)) return out;
  for (const auto& entry : fs::directory_iterator(bundle_dir)) {
    if (!entry.is_directory()) continue;
    fs::path dir = entry.path() / "variants";
    auto correct = slurp(dir / "correct.cs");
    if (!correct) continue;
    CodeVariants v;
    v.correct = std::move(*correct);
    v.failing = slurp(dir / "failing.cs");
    v.compile_error = slurp(dir / "compile_error.cs");
    v.runtime_error = slurp(dir / "runtime_error.cs");
    out.emplace(entry.path().filename().string(), std::move(v));
  }
  return out;
}

SimulationSummary simulate_cohort(Platform& platform, ManualClock& clock,
                                  const std::map<std::string, CodeVariants>& variants, const SimulationConfig& config) {
  using std::chrono::seconds;
  if (config.students <= 0) fail(Errc::invalid_argument, "a cohort needs at least one student");
  std::mt19937_64 rng(config.seed);
  auto between = [&](int lo, int hi) {
    return lo + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo + 1)));
  };

  std::vector<std::string> ids;
  std::vector<int> pretest;
  for (int i = 1; i <= config.students; ++i) {
    ids.push_back(fmt::format("p{:03}", i));
    pretest.push_back(between(0, 7));
  }
  auto roster = platform.enroll_roster(ids, pretest, config.seed);

  SimulationSummary sum;
  sum.participants = config.students;
  for (const auto& student : roster) {
    const double skill = config.skill_min + (config.skill_max - config.skill_min) * uniform_unit(rng);
    for (const auto& task : platform.assignments()) {
      auto vit = variants.find(task.id);
      if (vit == variants.end()) continue;
      const CodeVariants& v = vit->second;
      clock.advance(seconds(between(30, 300)));
      bool hinted = false;
      for (int attempt = 1; attempt <= config.max_attempts; ++attempt) {
        if (uniform_unit(rng) < config.long_break_probability) clock.advance(seconds(3 * 3600));
        double p = std::min(0.97, skill + config.learning * (attempt - 1) + (hinted ? config.hint_bonus : 0.0));
        const std::string* code = &v.correct;
        if (uniform_unit(rng) >= p) {
          double r = uniform_unit(rng);
          const std::optional<std::string>* pick = r < 0.4 ? &v.compile_error : r < 0.85 ? &v.failing : &v.runtime_error;
          if (*pick) code = &**pick;
          else if (v.failing) code = &*v.failing;
        }

        auto [outcome, hint] = platform.process_submission(student.id, task.id, *code);
        ++sum.submissions;
        hinted = hint.has_value();

        clock.advance(seconds(between(5, 40)));
        if (hint) {
          ++sum.hints_shown;
          int rating = 1 + static_cast<int>(uniform_below(rng, 5));
          if (uniform_unit(rng) < 0.6) rating = std::max(rating, 4);
          platform.rate_hint(student.id, hint->id, rating);
          ++sum.ratings;
        }
        OutcomeClass oc = outcome.evaluation.outcome;
        if ((oc == OutcomeClass::runtime_error || oc == OutcomeClass::test_failure) &&
            uniform_unit(rng) < config.click_probability) {
          auto red = std::find_if(outcome.feedback.test_entries.begin(), outcome.feedback.test_entries.end(),
                                  [](const auto& e) { return e.color == EntryColor::red; });
          if (red != outcome.feedback.test_entries.end()) {
            int clicks = uniform_unit(rng) < 0.2 ? 2 : 1;
            for (int c = 0; c < clicks; ++c) {
              platform.record_feedback_click(student.id, outcome.submission_id, red->spec_name);
              ++sum.clicks;
            }
          }
        }
        if (outcome.affect_prompt && uniform_unit(rng) < config.affect_answer_probability) {
          // Mostly focused; failures lean towards confusion or frustration.
          double r = uniform_unit(rng);
          AffectState st = AffectState::focused;
          if (oc != OutcomeClass::all_passed) {
            st = r < 0.45   ? AffectState::focused
                 : r < 0.65 ? AffectState::confused
                 : r < 0.8  ? AffectState::frustrated
                 : r < 0.88 ? AffectState::anxious
                 : r < 0.96 ? AffectState::bored
                            : AffectState::other;
          } else if (r > 0.85) {
            st = AffectState::bored;
          }
          platform.record_affect(student.id, st);
          ++sum.affect_responses;
        }
        if (oc == OutcomeClass::all_passed) break;
        clock.advance(seconds(between(60, 900)));
      }
    }
  }
  return sum;
}

SimulationRun run_simulation(const fs::path& bundle_dir, const SimulationConfig& config,
                             const std::optional<fs::path>& log_path, const ReportOptions& report_options) {
  auto assignments = load_assignment_bundle(bundle_dir);
  auto variants = load_code_variants(bundle_dir);
  if (variants.empty()) fail(Errc::invalid_argument, fmt::format("{} has no code variants", bundle_dir.string()));
  if (log_path && fs::exists(*log_path))
    fail(Errc::invalid_argument, fmt::format("{} already exists", log_path->string()));

  ManualClock clock(parse_rfc3339("2023-03-01T08:00:00Z"));
  std::optional<EventLog> log;
  if (log_path) log.emplace(clock, *log_path);
  else log.emplace(clock);

  PlatformConfig pc;
  pc.seed = config.seed;
  pc.evaluation_workers = 1;
  pc.hint_concurrency = 1;
  SimulationRun run;
  {
    Platform platform(std::move(assignments), std::make_shared<MockBackend>(),
                      std::make_shared<MockCompletionClient>(), clock, *log, pc);
    run.summary = simulate_cohort(platform, clock, variants, config);
  }
  if (!log->healthy()) fail(Errc::invalid_argument, "writing the event log failed");
  run.events = log->snapshot();
  run.online_report = build_report(run.events, report_options);
  return run;
}

}  // namespace gradehint
