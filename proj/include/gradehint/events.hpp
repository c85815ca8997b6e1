#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "gradehint/clock.hpp"
#include "gradehint/condition.hpp"
#include "gradehint/harness.hpp"

namespace gradehint {

enum class AffectState { focused, anxious, bored, confused, frustrated, other };

/// Presentation order of the affect survey.
inline constexpr std::array<AffectState, 6> kAffectStates = {AffectState::focused,  AffectState::anxious,
                                                             AffectState::bored,    AffectState::confused,
                                                             AffectState::frustrated, AffectState::other};

/// "Focused", "Anxious", ...
std::string_view to_string(AffectState s) noexcept;
/// Case-insensitive.
std::optional<AffectState> parse_affect_state(std::string_view s) noexcept;

struct ParticipantEnrolled {
  std::string participant;
  Condition condition = Condition::control;
  int pretest_score = 0;
  bool consent = true;
  friend bool operator==(const ParticipantEnrolled&, const ParticipantEnrolled&) = default;
};

struct SubmissionEvent {
  std::string submission_id;
  std::string participant;
  std::string assignment;
  int attempt_index = 1;
  OutcomeClass outcome = OutcomeClass::compile_error;
  double score = 0;
  std::string code_digest;
  /// Whether the task offers hints to the experimental condition.
  bool hints_enabled = false;
  /// Verbatim toolchain output for audit.
  std::string compiler_output;
  /// Present only when full-text retention is on.
  std::optional<std::string> code;
  friend bool operator==(const SubmissionEvent&, const SubmissionEvent&) = default;
};

struct FeedbackClick {
  std::string participant;
  std::string submission_id;
  std::string spec_name;
  friend bool operator==(const FeedbackClick&, const FeedbackClick&) = default;
};

struct HintShown {
  std::string hint_id;
  std::string participant;
  std::string submission_id;
  std::string scenario;
  int token_estimate = 0;
  std::int64_t latency_ms = 0;
  int retries = 0;
  friend bool operator==(const HintShown&, const HintShown&) = default;
};

struct HintRating {
  std::string hint_id;
  std::string participant;
  int value = 0;
  friend bool operator==(const HintRating&, const HintRating&) = default;
};

struct AffectPromptShown {
  std::string participant;
  std::string submission_id;
  friend bool operator==(const AffectPromptShown&, const AffectPromptShown&) = default;
};

struct AffectResponse {
  std::string participant;
  std::string submission_id;
  AffectState state = AffectState::other;
  friend bool operator==(const AffectResponse&, const AffectResponse&) = default;
};

struct HintSkipped {
  std::string participant;
  std::string submission_id;
  /// not_eligible, budget_exceeded, client_timeout, client_transport,
  /// client_rejected or sanitization_empty.
  std::string reason;
  friend bool operator==(const HintSkipped&, const HintSkipped&) = default;
};

using EventPayload = std::variant<ParticipantEnrolled, SubmissionEvent, FeedbackClick, HintShown, HintRating,
                                  AffectPromptShown, AffectResponse, HintSkipped>;

/// Wire name of the payload alternative, e.g. "submission".
std::string_view kind_name(const EventPayload& payload) noexcept;

struct Event {
  std::uint64_t seq = 0;
  Timestamp ts;
  EventPayload payload;

  friend bool operator==(const Event&, const Event&) = default;
};

/// One JSONL line without the trailing newline:
/// `{"seq":1,"ts":"...","kind":"submission","payload":{...}}`.
std::string serialize_event(const Event& e);
/// Throws Error(corrupt_log).
Event parse_event(std::string_view line);

/// Append-only log with serialized sequence numbers. Appends are
/// single-writer under a mutex; readers take immutable snapshots.
class EventLog {
 public:
  explicit EventLog(const Clock& clock);
  /// Continues an existing file (replaying it first) or creates it.
  EventLog(const Clock& clock, const std::filesystem::path& sink);

  Event append(EventPayload payload);
  std::vector<Event> snapshot() const;
  std::size_t size() const;
  /// False once a write to the sink failed.
  bool healthy() const;
  std::string to_jsonl() const;

 private:
  const Clock& clock_;
  mutable std::mutex mu_;
  std::vector<Event> events_;
  std::optional<std::ofstream> sink_;
  bool healthy_ = true;
};

/// Reads a JSONL stream, checking that seq strictly increases, that attempt
/// indices per (participant, assignment) run 1..n and that each affect
/// response answers one earlier prompt. Throws Error(corrupt_log) with the
/// line number or Error(invariant_violation).
std::vector<Event> replay_event_log(std::istream& in);
std::vector<Event> replay_event_log_file(const std::filesystem::path& path);

void write_event_log(std::ostream& out, const std::vector<Event>& events);

}  // namespace gradehint
