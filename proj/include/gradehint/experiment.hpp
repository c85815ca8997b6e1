#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gradehint/assignment.hpp"
#include "gradehint/events.hpp"
#include "gradehint/feedback.hpp"
#include "gradehint/harness.hpp"
#include "gradehint/hint.hpp"
#include "gradehint/thread_pool.hpp"

namespace gradehint {

struct Participant {
  std::string id;
  Condition condition = Condition::control;
  int pretest_score = 0;
  bool consent = true;

  friend bool operator==(const Participant&, const Participant&) = default;
};

/// Seeded Fisher-Yates shuffle of the roster; the first ceil(n/2) become
/// control, the rest experimental.
std::map<std::string, Condition> assign_condition(std::span<const std::string> roster, std::uint64_t seed);

/// Uniform integer in [0, bound) without modulo bias.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);
/// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform_unit(std::mt19937_64& rng);

/// Bernoulli draws deciding whether the affect survey is shown.
class AffectSampler {
 public:
  AffectSampler(double probability, std::uint64_t seed);
  bool draw();
  double probability() const { return p_; }

 private:
  double p_;
  std::mt19937_64 rng_;
};

struct PlatformConfig {
  Limits limits;
  PromptOptions prompt;
  CompletionParams params;
  RetryPolicy retry;
  double affect_probability = 1.0 / 3.0;
  std::uint64_t seed = 0;
  std::size_t evaluation_workers = 2;
  /// Cap on concurrent completion requests.
  std::size_t hint_concurrency = 2;
  /// Keep full submission text in the event log.
  bool retain_code = false;
};

struct SubmissionOutcome {
  std::string submission_id;
  std::string participant;
  std::string assignment;
  int attempt_index = 1;
  Evaluation evaluation;
  FeedbackView feedback;
  bool hint_pending = false;
  bool affect_prompt = false;
};

enum class HintState { not_requested, pending, ready, skipped };

struct HintStatus {
  HintState state = HintState::not_requested;
  std::optional<HintRecord> hint;
  std::string skip_reason;
};

/// Wires evaluation, feedback, hint generation, surveys and the event log.
class Platform {
 public:
  Platform(std::vector<Assignment> assignments, std::shared_ptr<const LanguageBackend> backend,
           std::shared_ptr<CompletionClient> client, const Clock& clock, EventLog& log, PlatformConfig config = {});
  ~Platform();

  Platform(const Platform&) = delete;
  Platform& operator=(const Platform&) = delete;

  const std::vector<Assignment>& assignments() const { return assignments_; }
  const Assignment* find_assignment(std::string_view id) const;

  /// Appends participant_enrolled. Throws Error(invalid_argument) for a
  /// duplicate id.
  void enroll(const Participant& p);
  /// Assigns conditions with assign_condition and enrolls everyone.
  std::vector<Participant> enroll_roster(std::span<const std::string> ids, std::span<const int> pretest_scores,
                                         std::uint64_t seed);
  std::optional<Participant> participant(std::string_view id) const;

  /// Evaluates synchronously and returns without waiting for the hint,
  /// which is generated on the hint pool. Throws Error(not_found) for an
  /// unknown participant or assignment, Error(invalid_argument) for a
  /// non-consenting participant, and propagates harness errors.
  SubmissionOutcome submit(std::string_view participant_id, std::string_view assignment_id, std::string code);

  /// Same pipeline, generating the hint inline.
  std::pair<SubmissionOutcome, std::optional<HintRecord>> process_submission(std::string_view participant_id,
                                                                             std::string_view assignment_id,
                                                                             std::string code);

  /// Throws Error(not_found) when the submission is unknown or belongs to
  /// someone else.
  HintStatus hint_status(std::string_view participant_id, std::string_view submission_id) const;
  /// Blocks until no hint is pending.
  void wait_for_hints();

  FeedbackClickEvent record_feedback_click(std::string_view participant_id, std::string_view submission_id,
                                           std::string_view spec_name);
  /// Throws Error(not_found), Error(out_of_range) or Error(already_rated).
  HintRecord rate_hint(std::string_view participant_id, std::string_view hint_id, int value);
  /// Throws Error(no_pending_prompt) or Error(duplicate_response).
  Event record_affect(std::string_view participant_id, AffectState state);

  EventLog& log() { return log_; }
  const Clock& clock() const { return clock_; }

 private:
  struct SubmissionRecord {
    std::string participant;
    FeedbackView feedback;
    HintStatus hint;
  };
  struct AffectWindow {
    std::string latest_submission;
    std::optional<std::string> prompted_submission;
    bool answered = false;
  };
  struct Prepared {
    SubmissionOutcome outcome;
    std::optional<Prompt> prompt;
  };

  Prepared prepare(std::string_view participant_id, std::string_view assignment_id, std::string code);
  std::optional<HintRecord> run_hint(const SubmissionOutcome& outcome, const Prompt& prompt);
  void finish_hint(const std::string& submission_id, const std::string& participant, HintGeneration gen);
  void skip_hint(const std::string& submission_id, const std::string& participant, std::string reason);
  std::mutex& lane(const std::string& participant, const std::string& assignment);

  std::vector<Assignment> assignments_;
  std::shared_ptr<const LanguageBackend> backend_;
  std::shared_ptr<CompletionClient> client_;
  const Clock& clock_;
  EventLog& log_;
  PlatformConfig config_;
  EvaluationPool evaluator_;

  mutable std::mutex mu_;
  std::condition_variable hints_done_;
  std::condition_variable stop_;
  bool stopping_ = false;
  std::map<std::string, Participant, std::less<>> participants_;
  std::map<std::pair<std::string, std::string>, int> attempts_;
  std::map<std::pair<std::string, std::string>, std::unique_ptr<std::mutex>> lanes_;
  std::map<std::string, SubmissionRecord, std::less<>> submissions_;
  std::map<std::string, HintRecord, std::less<>> hints_;
  std::map<std::string, std::string, std::less<>> hint_owner_;
  std::map<std::string, AffectWindow, std::less<>> affect_;
  AffectSampler sampler_;
  std::uint64_t next_submission_ = 1;
  std::size_t pending_hints_ = 0;

  // Declared last so it drains before the members its jobs use.
  ThreadPool hint_pool_;
};

}  // namespace gradehint
