#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "gradehint/assignment.hpp"
#include "gradehint/clock.hpp"
#include "gradehint/condition.hpp"
#include "gradehint/error.hpp"
#include "gradehint/harness.hpp"

namespace gradehint {

/// True iff the participant is experimental, the task enables hints for the
/// experimental condition and the submission did not pass every test.
bool hint_gate(Condition condition, const Assignment& assignment, OutcomeClass outcome) noexcept;

enum class PromptScenario { compile_error, runtime_error, failed_test };

std::string_view to_string(PromptScenario s) noexcept;
/// None for AllPassed.
std::optional<PromptScenario> scenario_for(OutcomeClass outcome) noexcept;

/// Maps a locale tag to the language word placed in the prompt: "pl" gives
/// "Polish", "en" gives "English". Throws Error(invalid_argument) otherwise.
std::string locale_word(std::string_view tag);

/// Fills the prompt template. `detail` is the text after the scenario
/// trailer label: the rendered compiler errors, `<TYPE>: <MESSAGE>` of the
/// exception, or `<NAME> ### Input values: <INPUTS> ### Expected outcome:
/// <EXPECTED>` for a failed test.
std::string render_prompt_text(PromptScenario scenario, std::string_view body, std::string_view code,
                               std::string_view detail, std::string_view language_word);

/// One diagnostic per line: `line <n>: error <CODE>: <message>`.
std::string render_compiler_errors(std::span<const Diagnostic> diagnostics);

// ---------------------------------------------------------------------------
// Token estimation

inline constexpr int kTokenBudget = 4000;

/// ceil(bytes / 4) + 8.
int estimate_tokens(std::string_view text) noexcept;

class TokenEstimator {
 public:
  virtual ~TokenEstimator() = default;
  virtual std::string name() const = 0;
  virtual int count(std::string_view text) const = 0;
};

class HeuristicEstimator final : public TokenEstimator {
 public:
  std::string name() const override { return "heuristic"; }
  int count(std::string_view text) const override { return estimate_tokens(text); }
};

/// Byte-pair-encoding tokenizer over a `.tiktoken` rank file (one
/// `<base64 token> <rank>` pair per line) with the cl100k pre-tokenizer.
/// Non-ASCII code points count as letters.
class BpeTokenizer final : public TokenEstimator {
 public:
  static std::shared_ptr<BpeTokenizer> from_file(const std::filesystem::path& path);

  std::string name() const override { return "bpe"; }
  int count(std::string_view text) const override;
  std::vector<int> encode(std::string_view text) const;
  std::size_t vocabulary_size() const { return ranks_.size(); }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
  };
  std::unordered_map<std::string, int, Hash, std::equal_to<>> ranks_;

  void encode_piece(std::string_view piece, std::vector<int>& out) const;
};

/// Builds an estimator from a name: "heuristic", or "bpe:<path>".
std::shared_ptr<const TokenEstimator> make_token_estimator(std::string_view spec);

// ---------------------------------------------------------------------------
// Prompts

struct CompletionParams {
  std::string model = "text-davinci-003";
  double temperature = 0;
  int max_tokens = 500;
  int n = 1;
  double top_p = 1;
  double frequency_penalty = 0;
  double presence_penalty = 0;

  /// `'model': 'text-davinci-003', 'temperature': 0, ...` in field order.
  std::string to_key_value_list() const;
  nlohmann::json to_json() const;
  static CompletionParams from_json(const nlohmann::json& j);

  friend bool operator==(const CompletionParams&, const CompletionParams&) = default;
};

struct Prompt {
  PromptScenario scenario = PromptScenario::compile_error;
  std::string text;
  int token_estimate = 0;
  std::string locale = "pl";

  friend bool operator==(const Prompt&, const Prompt&) = default;
};

/// Evaluation details the prompt is built from.
struct PromptDetail {
  std::vector<Diagnostic> diagnostics;
  std::optional<RuntimeFault> fault;
  /// Full suite results; the first failed one in suite order is used.
  std::vector<TestResult> results;
};

struct PromptOptions {
  std::string locale = "pl";
  int max_tokens = 500;
  int token_budget = kTokenBudget;
  /// Null selects the heuristic.
  std::shared_ptr<const TokenEstimator> estimator;
};

/// Throws Error(budget_exceeded) when estimate + max_tokens exceeds the
/// budget, Error(invalid_argument) for AllPassed, Error(inconsistent_inputs)
/// when the detail does not match the outcome.
Prompt build_prompt(const Assignment& assignment, std::string_view code, OutcomeClass outcome,
                    const PromptDetail& detail, const PromptOptions& options = {});

/// Keeps `<code>`/`</code>`, drops `<script>` and `<style>` elements with
/// their content, strips every other tag and escapes `&`, `<`, `>` in text.
std::string sanitize_markup(std::string_view raw);

// ---------------------------------------------------------------------------
// Completion clients

/// Throws Error(client_transport) for retryable failures (connection, 429,
/// 5xx), Error(client_rejected) for other API errors and
/// Error(client_timeout) when `timeout` elapses.
class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual std::string complete(const std::string& prompt, const CompletionParams& params,
                               std::chrono::milliseconds timeout) = 0;
  /// Interrupts pending waits; used at shutdown.
  virtual void cancel() {}
};

/// Reads `<dir>/<sha256(prompt)>.txt`. Without a fixture it answers with a
/// deterministic hint derived from the prompt's trailer.
class MockCompletionClient final : public CompletionClient {
 public:
  explicit MockCompletionClient(std::optional<std::filesystem::path> fixture_dir = std::nullopt)
      : dir_(std::move(fixture_dir)) {}

  std::string complete(const std::string& prompt, const CompletionParams& params,
                       std::chrono::milliseconds timeout) override;

  static std::string fallback_response(std::string_view prompt);

 private:
  std::optional<std::filesystem::path> dir_;
};

/// Plays a fixed schedule of replies, then repeats the last one. An
/// optional delay precedes every reply.
class ScriptedCompletionClient final : public CompletionClient {
 public:
  struct Step {
    enum class Kind { reply, transport_error, timeout, rejected };
    Kind kind = Kind::reply;
    std::string text;
  };

  explicit ScriptedCompletionClient(std::vector<Step> steps, std::chrono::milliseconds delay = {})
      : steps_(std::move(steps)), delay_(delay) {}

  /// Fails `failures` times with a transport error, then replies `text`.
  static std::shared_ptr<ScriptedCompletionClient> failing_then(int failures, std::string text);

  std::string complete(const std::string& prompt, const CompletionParams& params,
                       std::chrono::milliseconds timeout) override;
  void cancel() override;
  int calls() const;

 private:
  std::vector<Step> steps_;
  std::chrono::milliseconds delay_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool cancelled_ = false;
  int calls_ = 0;
};

/// OpenAI-compatible `POST <base>/v1/completions` with a bearer key.
class LiveCompletionClient final : public CompletionClient {
 public:
  LiveCompletionClient(std::string base_url, std::string api_key);
  /// Reads LLM_BASE_URL (default https://api.openai.com) and LLM_API_KEY.
  static std::shared_ptr<LiveCompletionClient> from_environment();

  std::string complete(const std::string& prompt, const CompletionParams& params,
                       std::chrono::milliseconds timeout) override;

 private:
  std::string base_url_;
  std::string api_key_;
};

// ---------------------------------------------------------------------------
// Hint generation

struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds total_timeout{30'000};
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Real sleep.
void sleep_for(std::chrono::milliseconds d);

struct HintRecord {
  std::string id;
  std::string submission_id;
  Prompt prompt;
  CompletionParams params;
  std::string response_markup;
  std::int64_t latency_ms = 0;
  int retries = 0;
  std::optional<int> rating;

  friend bool operator==(const HintRecord&, const HintRecord&) = default;
};

/// Outcome of a generation attempt. `hint` is absent when no hint may be
/// shown; `failure` then names the reason (client_timeout,
/// client_transport, client_rejected or sanitization_empty).
struct HintGeneration {
  std::optional<HintRecord> hint;
  std::optional<Errc> failure;
  std::string failure_detail;
  int retries = 0;
  /// One line per failed attempt.
  std::vector<std::string> attempt_log;
};

HintGeneration generate_hint(const Prompt& prompt, const CompletionParams& params, CompletionClient& client,
                             const Clock& clock, std::string hint_id, std::string submission_id,
                             const RetryPolicy& policy = {}, const Sleeper& sleeper = sleep_for);

/// Throws Error(out_of_range) for values outside 1..5 and
/// Error(already_rated) on a second rating.
void record_rating(HintRecord& hint, int value);

}  // namespace gradehint
