#include <doctest.h>

#include <random>

#include "gradehint/feedback.hpp"
#include "support.hpp"

using namespace gradehint;
using testing::code_of;
using testing::fixtures;
using testing::slurp;

namespace {

CompileOutcome compiled() {
  CompileOutcome c;
  c.status = CompileStatus::ok;
  return c;
}

CompileOutcome failed(std::vector<Diagnostic> d) {
  CompileOutcome c;
  c.diagnostics = std::move(d);
  return c;
}

std::vector<TestResult> mixed() {
  return {{"A", true, Literal(true), "\"A\"", "true"}, {"B", false, Literal(4), "2, 2", "5"}, {"C", true, {}, "", "1"}};
}

}  // namespace

TEST_SUITE("feedback") {

TEST_CASE("compile errors are shown without a click") {
  auto v = assemble_feedback_view(OutcomeClass::compile_error,
                                  failed({{7, "CS1002", "; expected"}, {3, "CS1002", "; expected"}, {7, "CS0103", "x"}}), {});
  CHECK(v.auto_shown);
  CHECK(v.highlighted_lines == std::vector<int>{3, 7});
  CHECK(v.compile_messages.size() == 3);
  CHECK(v.test_entries.empty());
  testing::LogBuilder b;
  CHECK(code_of([&] { make_feedback_click(v, "A", "p", "s", b.clock()); }) == Errc::not_clickable);
}

TEST_CASE("test entries keep order, colour and details") {
  auto v = assemble_feedback_view(OutcomeClass::test_failure, compiled(), mixed());
  CHECK_FALSE(v.auto_shown);
  REQUIRE(v.test_entries.size() == 3);
  CHECK(v.test_entries[0].color == EntryColor::green);
  CHECK(v.test_entries[1].color == EntryColor::red);
  CHECK(v.test_entries[1].expected_desc == "5");
  CHECK(v.test_entries[1].observed == Literal(4));
  auto j = to_json(v);
  CHECK(j["test_entries"][1]["observed"] == "4");
  CHECK(j["test_entries"][2]["observed"].is_null());
  CHECK(j["test_entries"][0]["color"] == "green");
}

TEST_CASE("only red entries are clickable") {
  auto v = assemble_feedback_view(OutcomeClass::test_failure, compiled(), mixed());
  ManualClock clock(testing::at("2023-03-01T10:00:00Z"));
  auto click = make_feedback_click(v, "B", "p001", "s000001", clock);
  CHECK(click == FeedbackClickEvent{"p001", "s000001", "B", clock.now()});
  CHECK(code_of([&] { make_feedback_click(v, "A", "p", "s", clock); }) == Errc::not_clickable);
  CHECK(code_of([&] { make_feedback_click(v, "Z", "p", "s", clock); }) == Errc::not_clickable);
}

TEST_CASE("contradictory inputs") {
  CHECK(code_of([] { assemble_feedback_view(OutcomeClass::compile_error, compiled(), mixed()); }) ==
        Errc::inconsistent_inputs);
  CHECK(code_of([] { assemble_feedback_view(OutcomeClass::test_failure, failed({}), {}); }) ==
        Errc::inconsistent_inputs);
  CHECK(code_of([] { assemble_feedback_view(OutcomeClass::all_passed, compiled(), mixed()); }) ==
        Errc::inconsistent_inputs);
  CHECK(code_of([] { assemble_feedback_view(OutcomeClass::test_failure, compiled(), {}); }) ==
        Errc::inconsistent_inputs);
  std::vector<TestResult> green{{"A", true, {}, "", ""}};
  CHECK(code_of([&] { assemble_feedback_view(OutcomeClass::test_failure, compiled(), green); }) ==
        Errc::inconsistent_inputs);
}

TEST_CASE("view property: one entry per result, red iff failed, sorted unique lines") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 3000; ++i) {
    if (rng() % 3 == 0) {
      std::vector<Diagnostic> d;
      for (int k = 0, n = int(rng() % 6) + 1; k < n; ++k) d.push_back({int(rng() % 20) + 1, "CS1002", "; expected"});
      auto v = assemble_feedback_view(OutcomeClass::compile_error, failed(d), {});
      CHECK(std::is_sorted(v.highlighted_lines.begin(), v.highlighted_lines.end()));
      CHECK(std::adjacent_find(v.highlighted_lines.begin(), v.highlighted_lines.end()) == v.highlighted_lines.end());
      for (const auto& x : d)
        CHECK(std::binary_search(v.highlighted_lines.begin(), v.highlighted_lines.end(), x.line));
      continue;
    }
    std::vector<TestResult> r;
    for (int k = 0, n = int(rng() % 10) + 1; k < n; ++k) r.push_back({fmt::format("t{}", k), rng() % 2 == 0, {}, "", ""});
    bool all = std::all_of(r.begin(), r.end(), [](const auto& x) { return x.passed; });
    auto v = assemble_feedback_view(all ? OutcomeClass::all_passed : OutcomeClass::test_failure, compiled(), r);
    REQUIRE(v.test_entries.size() == r.size());
    for (std::size_t k = 0; k < r.size(); ++k) {
      CHECK(v.test_entries[k].spec_name == r[k].spec_name);
      CHECK((v.test_entries[k].color == EntryColor::red) == !r[k].passed);
    }
  }
}

TEST_CASE("runtime errors still list tests") {
  MockBackend b;
  auto task = load_assignment_bundle(fixtures() / "bundle").at(1);
  auto ev = evaluate_submission(slurp(fixtures() / "bundle" / task.id / "variants" / "runtime_error.cs"), task.suite, b);
  REQUIRE(ev.outcome == OutcomeClass::runtime_error);
  auto v = assemble_feedback_view(ev.outcome, ev.compile, ev.results);
  CHECK(v.test_entries.size() == task.suite.size());
  CHECK(std::any_of(v.test_entries.begin(), v.test_entries.end(),
                    [](const auto& e) { return e.color == EntryColor::red; }));
}

}  // TEST_SUITE
