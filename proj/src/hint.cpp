#include "gradehint/hint.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "gradehint/digest.hpp"

namespace gradehint {

bool hint_gate(Condition condition, const Assignment& assignment, OutcomeClass outcome) noexcept {
  return condition == Condition::experimental && assignment.hint_policy.experimental &&
         outcome != OutcomeClass::all_passed;
}

std::string_view to_string(PromptScenario s) noexcept {
  switch (s) {
    case PromptScenario::compile_error: return "compile_error";
    case PromptScenario::runtime_error: return "runtime_error";
    case PromptScenario::failed_test: return "failed_test";
  }
  return "unknown";
}

std::optional<PromptScenario> scenario_for(OutcomeClass outcome) noexcept {
  switch (outcome) {
    case OutcomeClass::compile_error: return PromptScenario::compile_error;
    case OutcomeClass::runtime_error: return PromptScenario::runtime_error;
    case OutcomeClass::test_failure: return PromptScenario::failed_test;
    case OutcomeClass::all_passed: return std::nullopt;
  }
  return std::nullopt;
}

std::string locale_word(std::string_view tag) {
  if (tag == "pl") return "Polish";
  if (tag == "en") return "English";
  fail(Errc::invalid_argument, fmt::format("unsupported locale '{}'", tag));
}

std::string render_prompt_text(PromptScenario scenario, std::string_view body, std::string_view code,
                               std::string_view detail, std::string_view language_word) {
  std::string_view why = "does not compile";
  std::string_view label = "Compiler errors";
  if (scenario == PromptScenario::runtime_error) {
    why = "throws an exception";
    label = "Exception";
  } else if (scenario == PromptScenario::failed_test) {
    why = "fails the unit test";
    label = "Failed unit test";
  }
  return fmt::format(
      "I want you to act as a Stackoverflow post that helps me to solve a programming assignment in C#. "
      "I want you to explain in {} why this code {}. "
      "Don't write solution in the explanation, but focus on meaningful hints. "
      "I want you to also include the line where the compiler error occurred in the explanation. "
      "I want you to also include a line number for each detected error in the explanation. "
      "To help me better understand your response, highlight keywords, line numbers, class names, variable names, "
      "messages, line numbers and error names with the <code></code> HTML markup in the explanation. "
      "Programming assignment: ### {} ### C# code: {} ### {}: {}",
      language_word, why, body, code, label, detail);
}

std::string render_compiler_errors(std::span<const Diagnostic> diagnostics) {
  std::string out;
  for (const auto& d : diagnostics) {
    if (!out.empty()) out += '\n';
    out += fmt::format("line {}: error {}: {}", d.line, d.code, d.message);
  }
  return out;
}

int estimate_tokens(std::string_view text) noexcept {
  return static_cast<int>((text.size() + 3) / 4) + 8;
}

std::shared_ptr<const TokenEstimator> make_token_estimator(std::string_view spec) {
  if (spec.empty() || spec == "heuristic") return std::make_shared<HeuristicEstimator>();
  if (spec.starts_with("bpe:")) return BpeTokenizer::from_file(std::string(spec.substr(4)));
  fail(Errc::invalid_argument, fmt::format("unknown token estimator '{}'", spec));
}

// ---------------------------------------------------------------------------

namespace {

std::string number(double v) {
  if (v == static_cast<double>(static_cast<long long>(v))) return std::to_string(static_cast<long long>(v));
  return fmt::format("{}", v);
}

}  // namespace

std::string CompletionParams::to_key_value_list() const {
  return fmt::format(
      "'model': '{}', 'temperature': {}, 'max_tokens': {}, 'n': {}, 'top_p': {}, 'frequency_penalty': {}, "
      "'presence_penalty': {}",
      model, number(temperature), max_tokens, n, number(top_p), number(frequency_penalty), number(presence_penalty));
}

nlohmann::json CompletionParams::to_json() const {
  nlohmann::ordered_json j;
  auto num = [](double v) -> nlohmann::json {
    if (v == static_cast<double>(static_cast<long long>(v))) return static_cast<long long>(v);
    return v;
  };
  j["model"] = model;
  j["temperature"] = num(temperature);
  j["max_tokens"] = max_tokens;
  j["n"] = n;
  j["top_p"] = num(top_p);
  j["frequency_penalty"] = num(frequency_penalty);
  j["presence_penalty"] = num(presence_penalty);
  return nlohmann::json::parse(j.dump());
}

CompletionParams CompletionParams::from_json(const nlohmann::json& j) {
  CompletionParams p;
  try {
    p.model = j.value("model", p.model);
    p.temperature = j.value("temperature", p.temperature);
    p.max_tokens = j.value("max_tokens", p.max_tokens);
    p.n = j.value("n", p.n);
    p.top_p = j.value("top_p", p.top_p);
    p.frequency_penalty = j.value("frequency_penalty", p.frequency_penalty);
    p.presence_penalty = j.value("presence_penalty", p.presence_penalty);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_argument, fmt::format("bad completion parameters: {}", e.what()));
  }
  return p;
}

Prompt build_prompt(const Assignment& assignment, std::string_view code, OutcomeClass outcome,
                    const PromptDetail& detail, const PromptOptions& options) {
  auto scenario = scenario_for(outcome);
  if (!scenario) fail(Errc::invalid_argument, "no hint prompt exists for a fully passing submission");

  std::string trailer;
  switch (*scenario) {
    case PromptScenario::compile_error:
      if (detail.diagnostics.empty()) fail(Errc::inconsistent_inputs, "compile-error prompt needs diagnostics");
      trailer = render_compiler_errors(detail.diagnostics);
      break;
    case PromptScenario::runtime_error:
      if (!detail.fault) fail(Errc::inconsistent_inputs, "runtime-error prompt needs a fault");
      trailer = fmt::format("{}: {}", detail.fault->exception_type, detail.fault->message);
      break;
    case PromptScenario::failed_test: {
      auto it = std::find_if(detail.results.begin(), detail.results.end(), [](const auto& r) { return !r.passed; });
      if (it == detail.results.end()) fail(Errc::inconsistent_inputs, "failed-test prompt needs a failed result");
      trailer = fmt::format("{} ### Input values: {} ### Expected outcome: {}", it->spec_name, it->input_desc,
                            it->expected_desc);
      break;
    }
  }

  Prompt p;
  p.scenario = *scenario;
  p.locale = options.locale;
  p.text = render_prompt_text(*scenario, assignment.body, code, trailer, locale_word(options.locale));
  p.token_estimate = options.estimator ? options.estimator->count(p.text) : estimate_tokens(p.text);
  if (p.token_estimate + options.max_tokens > options.token_budget)
    fail(Errc::budget_exceeded, fmt::format("prompt needs {} tokens plus {} for the completion; budget is {}",
                                            p.token_estimate, options.max_tokens, options.token_budget));
  return p;
}

// ---------------------------------------------------------------------------
// Sanitizer

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void append_escaped(std::string& out, char c) {
  switch (c) {
    case '&': out += "&amp;"; break;
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    default: out += c;
  }
}

/// Decodes the handful of entities a model is likely to emit so they are
/// not escaped twice.
std::size_t decode_entity(std::string_view s, std::size_t i, char& out) {
  static const std::pair<std::string_view, char> kEntities[] = {
      {"&lt;", '<'}, {"&gt;", '>'}, {"&amp;", '&'}, {"&quot;", '"'}, {"&#39;", '\''}, {"&apos;", '\''}};
  for (auto [name, ch] : kEntities) {
    if (s.substr(i, name.size()) == name) {
      out = ch;
      return name.size();
    }
  }
  return 0;
}

}  // namespace

std::string sanitize_markup(std::string_view raw) {
  std::string out;
  int open_code = 0;
  std::size_t i = 0;
  while (i < raw.size()) {
    char c = raw[i];
    if (c == '&') {
      char decoded = 0;
      if (std::size_t n = decode_entity(raw, i, decoded)) {
        append_escaped(out, decoded);
        i += n;
        continue;
      }
      append_escaped(out, c);
      ++i;
      continue;
    }
    if (c != '<') {
      append_escaped(out, c);
      ++i;
      continue;
    }
    auto close = raw.find('>', i);
    bool looks_like_tag = close != std::string_view::npos && i + 1 < raw.size() &&
                          (std::isalpha(static_cast<unsigned char>(raw[i + 1])) || raw[i + 1] == '/' || raw[i + 1] == '!');
    if (!looks_like_tag) {
      append_escaped(out, c);
      ++i;
      continue;
    }
    std::string inner = lower(raw.substr(i + 1, close - i - 1));
    bool closing = !inner.empty() && inner[0] == '/';
    std::string name = inner.substr(closing ? 1 : 0);
    name = name.substr(0, name.find_first_of(" \t\r\n/"));
    i = close + 1;
    if (name == "code") {
      if (!closing) {
        out += "<code>";
        ++open_code;
      } else if (open_code > 0) {
        out += "</code>";
        --open_code;
      }
      continue;
    }
    if (!closing && (name == "script" || name == "style")) {
      std::string lowered = lower(raw.substr(i));
      auto end = lowered.find("</" + name);
      if (end == std::string::npos) {
        i = raw.size();
      } else {
        auto gt = raw.find('>', i + end);
        i = gt == std::string_view::npos ? raw.size() : gt + 1;
      }
    }
  }
  while (open_code-- > 0) out += "</code>";
  return out;
}

namespace {

bool visibly_empty(std::string_view markup) {
  std::string text(markup);
  for (std::string_view tag : {"<code>", "</code>"}) {
    for (auto p = text.find(tag); p != std::string::npos; p = text.find(tag)) text.erase(p, tag.size());
  }
  return text.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

// ---------------------------------------------------------------------------
// Clients

std::string MockCompletionClient::complete(const std::string& prompt, const CompletionParams&,
                                           std::chrono::milliseconds) {
  if (dir_) {
    std::ifstream in(*dir_ / (sha256_hex(prompt) + ".txt"), std::ios::binary);
    if (in) {
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    }
  }
  return fallback_response(prompt);
}

std::string MockCompletionClient::fallback_response(std::string_view prompt) {
  auto escape = [](std::string_view s) {
    std::string out;
    for (char c : s) append_escaped(out, c);
    return out;
  };
  auto section = [&](std::string_view label) -> std::optional<std::string_view> {
    auto p = prompt.rfind(label);
    if (p == std::string_view::npos) return std::nullopt;
    return prompt.substr(p + label.size());
  };
  if (auto errors = section("### Compiler errors: ")) {
    std::string out;
    std::istringstream lines{std::string(*errors)};
    std::string line;
    while (std::getline(lines, line)) {
      int n = 0;
      char code[32] = {};
      if (std::sscanf(line.c_str(), "line %d: error %31[^:]:", &n, code) == 2) {
        auto msg = line.substr(line.find(':', line.find(code)) + 2);
        out += fmt::format("A compiler error <code>error {}</code> occurred in line <code>{}</code> with the message "
                           "<code>{}</code>. Look closely at line <code>{}</code>.\n",
                           escape(code), n, escape(msg), n);
      }
    }
    if (!out.empty()) return out;
  }
  if (auto exc = section("### Exception: ")) {
    auto type = exc->substr(0, exc->find(':'));
    return fmt::format("The program throws <code>{}</code> while running. Check which values can reach the "
                       "operation that raises it.",
                       escape(type));
  }
  if (auto test = section("### Failed unit test: ")) {
    auto name = test->substr(0, test->find(" ###"));
    return fmt::format("The unit test <code>{}</code> fails. Compare the expected outcome with what your code "
                       "returns for the given input values.",
                       escape(name));
  }
  return "Review the assignment text and compare it with your code.";
}

std::shared_ptr<ScriptedCompletionClient> ScriptedCompletionClient::failing_then(int failures, std::string text) {
  std::vector<Step> steps(static_cast<std::size_t>(std::max(failures, 0)), Step{Step::Kind::transport_error, {}});
  steps.push_back(Step{Step::Kind::reply, std::move(text)});
  return std::make_shared<ScriptedCompletionClient>(std::move(steps));
}

std::string ScriptedCompletionClient::complete(const std::string&, const CompletionParams&,
                                               std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  std::size_t idx = static_cast<std::size_t>(calls_++);
  if (delay_.count() > 0) {
    auto wait = std::min(delay_, timeout);
    cv_.wait_for(lock, wait, [&] { return cancelled_; });
    if (cancelled_) fail(Errc::client_transport, "client cancelled");
    if (delay_ > timeout) fail(Errc::client_timeout, "scripted delay exceeded the timeout");
  }
  if (steps_.empty()) return {};
  const Step& s = steps_[std::min(idx, steps_.size() - 1)];
  switch (s.kind) {
    case Step::Kind::reply: return s.text;
    case Step::Kind::transport_error: fail(Errc::client_transport, fmt::format("scripted transport failure #{}", idx + 1));
    case Step::Kind::timeout: fail(Errc::client_timeout, "scripted timeout");
    case Step::Kind::rejected: fail(Errc::client_rejected, "scripted rejection");
  }
  return {};
}

void ScriptedCompletionClient::cancel() {
  {
    std::lock_guard lock(mu_);
    cancelled_ = true;
  }
  cv_.notify_all();
}

int ScriptedCompletionClient::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

LiveCompletionClient::LiveCompletionClient(std::string base_url, std::string api_key)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  if (base_url_.find("://") == std::string::npos)
    fail(Errc::invalid_argument, fmt::format("LLM base URL '{}' needs a scheme", base_url_));
}

std::shared_ptr<LiveCompletionClient> LiveCompletionClient::from_environment() {
  const char* base = std::getenv("LLM_BASE_URL");
  const char* key = std::getenv("LLM_API_KEY");
  if (!key || !*key) fail(Errc::invalid_argument, "LLM_API_KEY is not set");
  return std::make_shared<LiveCompletionClient>(base && *base ? base : "https://api.openai.com", key);
}

std::string LiveCompletionClient::complete(const std::string& prompt, const CompletionParams& params,
                                           std::chrono::milliseconds timeout) {
  auto scheme_end = base_url_.find("://") + 3;
  auto path_start = base_url_.find('/', scheme_end);
  std::string origin = base_url_.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : base_url_.substr(path_start);
  std::string path = prefix.ends_with("/v1") ? prefix + "/completions" : prefix + "/v1/completions";

  httplib::Client cli(origin);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  cli.set_bearer_token_auth(api_key_);

  nlohmann::json body = params.to_json();
  body["prompt"] = prompt;
  auto res = cli.Post(path, body.dump(), "application/json");
  if (!res) {
    auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
      fail(Errc::client_timeout, fmt::format("completion request failed: {}", httplib::to_string(err)));
    fail(Errc::client_transport, fmt::format("completion request failed: {}", httplib::to_string(err)));
  }
  if (res->status == 429 || res->status >= 500)
    fail(Errc::client_transport, fmt::format("completion API returned {}", res->status));
  if (res->status != 200) fail(Errc::client_rejected, fmt::format("completion API returned {}: {}", res->status, res->body));
  try {
    auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::client_rejected, fmt::format("unexpected completion response: {}", e.what()));
  }
}

// ---------------------------------------------------------------------------

void sleep_for(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

HintGeneration generate_hint(const Prompt& prompt, const CompletionParams& params, CompletionClient& client,
                             const Clock& clock, std::string hint_id, std::string submission_id,
                             const RetryPolicy& policy, const Sleeper& sleeper) {
  using std::chrono::milliseconds;
  HintGeneration gen;
  const auto start = clock.now();
  auto elapsed = [&] { return std::chrono::duration_cast<milliseconds>(clock.now() - start); };
  auto give_up = [&](Errc code, std::string detail) {
    gen.failure = code;
    gen.failure_detail = std::move(detail);
    return gen;
  };

  for (int attempt = 0;; ++attempt) {
    milliseconds remaining = policy.total_timeout - elapsed();
    if (remaining.count() <= 0) return give_up(Errc::client_timeout, "total hint timeout elapsed");
    std::string raw;
    try {
      raw = client.complete(prompt.text, params, remaining);
    } catch (const Error& e) {
      gen.attempt_log.push_back(fmt::format("attempt {}: {}: {}", attempt + 1, to_string(e.code()), e.what()));
      bool retryable = e.code() == Errc::client_transport || e.code() == Errc::client_timeout;
      if (!retryable || attempt >= policy.max_retries) return give_up(e.code(), e.what());
      milliseconds backoff = policy.initial_backoff * (1 << attempt);
      if (elapsed() + backoff >= policy.total_timeout) return give_up(Errc::client_timeout, "no time left to retry");
      sleeper(backoff);
      ++gen.retries;
      continue;
    }
    std::string markup = sanitize_markup(raw);
    if (visibly_empty(markup)) return give_up(Errc::sanitization_empty, "response is empty after sanitizing");
    HintRecord h;
    h.id = std::move(hint_id);
    h.submission_id = std::move(submission_id);
    h.prompt = prompt;
    h.params = params;
    h.response_markup = std::move(markup);
    h.latency_ms = elapsed().count();
    h.retries = gen.retries;
    gen.hint = std::move(h);
    return gen;
  }
}

void record_rating(HintRecord& hint, int value) {
  if (value < 1 || value > 5) fail(Errc::out_of_range, fmt::format("rating {} is outside 1..5", value));
  if (hint.rating) fail(Errc::already_rated, fmt::format("hint {} is already rated", hint.id));
  hint.rating = value;
}

}  // namespace gradehint
