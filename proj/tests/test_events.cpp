#include <doctest.h>

#include <random>
#include <thread>

#include "support.hpp"

using namespace gradehint;
using testing::code_of;
using testing::TempDir;

namespace {

std::vector<Event> sample_events() {
  testing::LogBuilder b;
  b.enroll("p001", Condition::experimental, 4);
  b.enroll("p002", Condition::control, 2, false);
  auto s1 = b.fail_test("p001", "a01");
  b.advance(30);
  b.click("p001", s1);
  b.log().append(HintShown{"h1", "p001", s1, "failed_test", 412, 1830, 1});
  b.log().append(HintRating{"h1", "p001", 4});
  b.log().append(HintSkipped{"p001", s1, "budget_exceeded"});
  b.affect("p001", AffectState::confused);
  auto s2 = b.pass("p001", "a01");
  (void)s2;
  SubmissionEvent full{"s000099", "p002", "a02", 1, OutcomeClass::compile_error, 0.0, "d", false,
                       "P.cs(1,1): error CS1002: ; expected", std::string("class A {\n\t\"x\"\n}")};
  b.log().append(full);
  return b.events();
}

std::string jsonl(const std::vector<Event>& events) {
  std::ostringstream out;
  write_event_log(out, events);
  return out.str();
}

}  // namespace

TEST_SUITE("events") {

TEST_CASE("every payload roundtrips through a JSONL line") {
  auto events = sample_events();
  REQUIRE(events.size() == 11);
  for (const auto& e : events) {
    auto line = serialize_event(e);
    CHECK(line.find('\n') == std::string::npos);
    CHECK(parse_event(line) == e);
  }
  std::istringstream in(jsonl(events));
  CHECK(replay_event_log(in) == events);
}

TEST_CASE("wire format") {
  auto events = sample_events();
  auto j = nlohmann::json::parse(serialize_event(events[2]));
  CHECK(j["seq"] == 3);
  CHECK(j["ts"] == "2023-03-01T10:00:00.000Z");
  CHECK(j["kind"] == "submission");
  CHECK(j["payload"]["attempt_index"] == 1);
  CHECK(j["payload"]["outcome"] == "TestFailure");
  CHECK_FALSE(j["payload"].contains("code"));
  CHECK(kind_name(events[0].payload) == "participant_enrolled");
}

TEST_CASE("affect states parse case-insensitively") {
  for (auto s : kAffectStates) CHECK(parse_affect_state(to_string(s)) == s);
  CHECK(parse_affect_state("FRUSTRATED") == AffectState::frustrated);
  CHECK_FALSE(parse_affect_state("sleepy").has_value());
}

TEST_CASE("corrupt line is reported with its number") {
  auto text = jsonl(sample_events());
  auto pos = text.find('\n', text.find('\n') + 1);
  text.insert(pos + 1, "{\"seq\": 2.5, nope\n");
  std::istringstream in(text);
  try {
    replay_event_log(in);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::corrupt_log);
    CHECK(std::string(e.what()).starts_with("line 3:"));
  }
  for (const char* bad : {"[]", R"({"seq":1,"ts":"x","kind":"submission","payload":{}})",
                          R"({"seq":1,"ts":"2023-03-01T10:00:00Z","kind":"mystery","payload":{}})"}) {
    std::istringstream one(bad);
    CHECK(code_of([&] { replay_event_log(one); }) == Errc::corrupt_log);
  }
}

TEST_CASE("replay invariants") {
  auto events = sample_events();
  SUBCASE("seq must increase") {
    std::swap(events[3], events[4]);
    std::istringstream in(jsonl(events));
    CHECK(code_of([&] { replay_event_log(in); }) == Errc::invariant_violation);
  }
  SUBCASE("attempt indices run from one") {
    std::get<SubmissionEvent>(events[9].payload).attempt_index = 3;
    std::istringstream in(jsonl(events));
    CHECK(code_of([&] { replay_event_log(in); }) == Errc::invariant_violation);
  }
  SUBCASE("affect response needs a prompt") {
    events.erase(events.begin() + 7);
    std::istringstream in(jsonl(events));
    CHECK(code_of([&] { replay_event_log(in); }) == Errc::invariant_violation);
  }
  SUBCASE("one response per prompt") {
    auto dup = events[8];
    dup.seq = 100;
    events.push_back(dup);
    std::istringstream in(jsonl(events));
    CHECK(code_of([&] { replay_event_log(in); }) == Errc::invariant_violation);
  }
}

TEST_CASE("blank lines and CRLF are tolerated") {
  auto events = sample_events();
  std::string text;
  for (const auto& e : events) text += serialize_event(e) + "\r\n\n";
  std::istringstream in(text);
  CHECK(replay_event_log(in) == events);
}

TEST_CASE("file sink resumes numbering after restart") {
  TempDir dir;
  auto path = dir / "events.jsonl";
  ManualClock clock(testing::at("2023-03-01T10:00:00Z"));
  {
    EventLog log(clock, path);
    log.append(ParticipantEnrolled{"p001", Condition::control, 1, true});
    log.append(FeedbackClick{"p001", "s1", "T"});
    CHECK(log.healthy());
  }
  clock.advance(std::chrono::minutes(5));
  {
    EventLog log(clock, path);
    CHECK(log.size() == 2);
    auto e = log.append(HintRating{"h1", "p001", 3});
    CHECK(e.seq == 3);
    CHECK(log.to_jsonl() == testing::slurp(path));
  }
  auto events = replay_event_log_file(path);
  REQUIRE(events.size() == 3);
  CHECK(format_rfc3339(events[2].ts) == "2023-03-01T10:05:00.000Z");
}

TEST_CASE("restart refuses a damaged log") {
  TempDir dir;
  auto path = dir / "events.jsonl";
  std::ofstream(path) << "garbage\n";
  ManualClock clock(testing::at("2023-03-01T10:00:00Z"));
  CHECK(code_of([&] { EventLog log(clock, path); }) == Errc::corrupt_log);
}

TEST_CASE("concurrent appends get distinct consecutive seqs") {
  ManualClock clock(testing::at("2023-03-01T10:00:00Z"));
  EventLog log(clock);
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&, t] {
      for (int i = 0; i < 250; ++i) log.append(FeedbackClick{fmt::format("p{}", t), "s", "T"});
    });
  for (auto& th : threads) th.join();
  auto events = log.snapshot();
  REQUIRE(events.size() == 2000);
  for (std::size_t i = 0; i < events.size(); ++i) CHECK(events[i].seq == i + 1);
}

TEST_CASE("random logs roundtrip") {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 50; ++round) {
    testing::LogBuilder b;
    for (int i = 0, n = int(rng() % 40); i < n; ++i) {
      auto p = fmt::format("p{:03}", rng() % 5);
      switch (rng() % 4) {
        case 0: b.submit(p, fmt::format("a{}", rng() % 3), OutcomeClass::runtime_error, 12.5); break;
        case 1: b.affect(p, kAffectStates[rng() % 6]); break;
        case 2: b.rate(p, int(rng() % 5) + 1); break;
        default: b.advance(static_cast<std::int64_t>(rng() % 1000));
      }
    }
    auto events = b.events();
    std::istringstream in(b.log().to_jsonl());
    CHECK(replay_event_log(in) == events);
  }
}

}  // TEST_SUITE
