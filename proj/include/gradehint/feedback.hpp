#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradehint/clock.hpp"
#include "gradehint/harness.hpp"

namespace gradehint {

enum class EntryColor { green, red };

std::string_view to_string(EntryColor c) noexcept;

struct TestEntry {
  std::string spec_name;
  EntryColor color = EntryColor::red;
  bool details_available = true;
  std::string input_desc;
  std::string expected_desc;
  std::optional<Literal> observed;

  friend bool operator==(const TestEntry&, const TestEntry&) = default;
};

/// The regular (non-LLM) feedback shown after a submission.
struct FeedbackView {
  /// Set for compile errors, which need no click to be seen.
  bool auto_shown = false;
  /// Sorted, without duplicates.
  std::vector<int> highlighted_lines;
  std::vector<TestEntry> test_entries;
  std::vector<Diagnostic> compile_messages;

  friend bool operator==(const FeedbackView&, const FeedbackView&) = default;
};

/// Throws Error(inconsistent_inputs) when the outcome disagrees with the
/// compile status or the results.
FeedbackView assemble_feedback_view(OutcomeClass outcome, const CompileOutcome& compile,
                                    std::span<const TestResult> results);

nlohmann::json to_json(const FeedbackView& view);

struct FeedbackClickEvent {
  std::string participant_id;
  std::string submission_id;
  std::string spec_name;
  Timestamp timestamp;

  friend bool operator==(const FeedbackClickEvent&, const FeedbackClickEvent&) = default;
};

/// Validates the click against the view. Throws Error(not_clickable) for a
/// green entry, an unknown spec or a compile-error view. Appending to the
/// event log is the caller's job (see Platform::record_feedback_click).
FeedbackClickEvent make_feedback_click(const FeedbackView& view, std::string_view spec_name,
                                       std::string participant_id, std::string submission_id, const Clock& clock);

}  // namespace gradehint
