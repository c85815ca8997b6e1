#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <doctest.h>
#include <fmt/format.h>

#include "gradehint/analytics.hpp"
#include "gradehint/assignment.hpp"
#include "gradehint/clock.hpp"
#include "gradehint/events.hpp"
#include "gradehint/experiment.hpp"

namespace testing {

namespace fs = std::filesystem;
using namespace gradehint;

inline fs::path fixtures() { return fs::path(GRADEHINT_FIXTURES_DIR); }

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = fs::temp_directory_path() / fmt::format("gradehint-test-{:016x}", rng());
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

/// Error code thrown by `fn`; fails the test when nothing is thrown.
template <class F>
Errc code_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::invalid_argument;
}

inline Timestamp at(const char* rfc3339) { return parse_rfc3339(rfc3339); }

/// Small assignment with `n` class_defined specs.
inline Assignment make_assignment(std::string id, bool expt_hints = true, int n = 2) {
  Assignment a;
  a.id = std::move(id);
  a.title = "Task " + a.id;
  a.body = "Write class User.";
  a.hint_policy = {false, expt_hints};
  for (int i = 0; i < n; ++i) {
    TestSpec s;
    s.name = fmt::format("TestIsClassDefined(\"C{}\")", i);
    s.kind = TestKind::class_defined;
    s.arguments = {Literal(fmt::format("C{}", i))};
    s.expected = Literal(true);
    a.suite.push_back(std::move(s));
  }
  return a;
}

/// Writes events straight into a log, keeping attempt indices consistent.
class LogBuilder {
 public:
  LogBuilder() : clock_(at("2023-03-01T10:00:00Z")), log_(clock_) {}

  ManualClock& clock() { return clock_; }
  EventLog& log() { return log_; }
  std::vector<Event> events() const { return log_.snapshot(); }

  void advance(std::int64_t seconds) { clock_.advance(std::chrono::seconds(seconds)); }

  void enroll(const std::string& p, Condition c, int pretest = 0, bool consent = true) {
    log_.append(ParticipantEnrolled{p, c, pretest, consent});
  }

  std::string submit(const std::string& p, const std::string& task, OutcomeClass outcome, double score,
                     bool hints_enabled = true) {
    int attempt = ++attempts_[{p, task}];
    std::string sid = fmt::format("s{:06}", ++next_);
    log_.append(SubmissionEvent{sid, p, task, attempt, outcome, score, "digest", hints_enabled, "", std::nullopt});
    return sid;
  }
  std::string pass(const std::string& p, const std::string& task, bool hints_enabled = true) {
    return submit(p, task, OutcomeClass::all_passed, 100.0, hints_enabled);
  }
  std::string fail_test(const std::string& p, const std::string& task, bool hints_enabled = true) {
    return submit(p, task, OutcomeClass::test_failure, 50.0, hints_enabled);
  }

  void click(const std::string& p, const std::string& sid) { log_.append(FeedbackClick{p, sid, "TestX"}); }
  void rate(const std::string& p, int value) {
    log_.append(HintRating{fmt::format("h{:06}", ++next_hint_), p, value});
  }
  void affect(const std::string& p, AffectState s) {
    std::string sid = fmt::format("s{:06}", ++next_);
    log_.append(AffectPromptShown{p, sid});
    log_.append(AffectResponse{p, sid, s});
  }

 private:
  ManualClock clock_;
  EventLog log_;
  std::map<std::pair<std::string, std::string>, int> attempts_;
  int next_ = 0;
  int next_hint_ = 0;
};

}  // namespace testing
