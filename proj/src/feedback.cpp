#include "gradehint/feedback.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "gradehint/error.hpp"

namespace gradehint {

std::string_view to_string(EntryColor c) noexcept { return c == EntryColor::green ? "green" : "red"; }

FeedbackView assemble_feedback_view(OutcomeClass outcome, const CompileOutcome& compile,
                                    std::span<const TestResult> results) {
  bool compiled = compile.status == CompileStatus::ok;
  if ((outcome == OutcomeClass::compile_error) == compiled)
    fail(Errc::inconsistent_inputs, fmt::format("outcome {} contradicts the compile status", to_string(outcome)));

  FeedbackView view;
  if (!compiled) {
    if (!results.empty()) fail(Errc::inconsistent_inputs, "test results supplied for a failed compile");
    view.auto_shown = true;
    view.compile_messages = compile.diagnostics;
    for (const auto& d : compile.diagnostics) view.highlighted_lines.push_back(d.line);
    std::sort(view.highlighted_lines.begin(), view.highlighted_lines.end());
    view.highlighted_lines.erase(std::unique(view.highlighted_lines.begin(), view.highlighted_lines.end()),
                                 view.highlighted_lines.end());
    return view;
  }

  if (results.empty()) fail(Errc::inconsistent_inputs, "a compiled submission must carry test results");
  bool all = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
  if ((outcome == OutcomeClass::all_passed) != all)
    fail(Errc::inconsistent_inputs, fmt::format("outcome {} contradicts the test results", to_string(outcome)));
  if (outcome == OutcomeClass::test_failure && all)
    fail(Errc::inconsistent_inputs, "TestFailure without a failed test");

  for (const auto& r : results) {
    TestEntry e;
    e.spec_name = r.spec_name;
    e.color = r.passed ? EntryColor::green : EntryColor::red;
    e.input_desc = r.input_desc;
    e.expected_desc = r.expected_desc;
    e.observed = r.observed;
    view.test_entries.push_back(std::move(e));
  }
  return view;
}

nlohmann::json to_json(const FeedbackView& view) {
  nlohmann::json j;
  j["auto_shown"] = view.auto_shown;
  j["highlighted_lines"] = view.highlighted_lines;
  j["compile_messages"] = nlohmann::json::array();
  for (const auto& d : view.compile_messages)
    j["compile_messages"].push_back({{"line", d.line}, {"code", d.code}, {"message", d.message}});
  j["test_entries"] = nlohmann::json::array();
  for (const auto& e : view.test_entries) {
    nlohmann::json t{{"spec_name", e.spec_name},
                     {"color", to_string(e.color)},
                     {"details_available", e.details_available},
                     {"input_desc", e.input_desc},
                     {"expected_desc", e.expected_desc}};
    t["observed"] = e.observed ? nlohmann::json(describe(*e.observed)) : nlohmann::json(nullptr);
    j["test_entries"].push_back(std::move(t));
  }
  return j;
}

FeedbackClickEvent make_feedback_click(const FeedbackView& view, std::string_view spec_name,
                                       std::string participant_id, std::string submission_id, const Clock& clock) {
  if (view.auto_shown) fail(Errc::not_clickable, "compile-error feedback has no clickable tests");
  auto it = std::find_if(view.test_entries.begin(), view.test_entries.end(),
                         [&](const auto& e) { return e.spec_name == spec_name; });
  if (it == view.test_entries.end()) fail(Errc::not_clickable, fmt::format("no test named '{}'", spec_name));
  if (it->color != EntryColor::red) fail(Errc::not_clickable, fmt::format("test '{}' passed", spec_name));
  return FeedbackClickEvent{std::move(participant_id), std::move(submission_id), std::string(spec_name), clock.now()};
}

}  // namespace gradehint
