#include "gradehint/events.hpp"

#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "gradehint/error.hpp"

namespace gradehint {

using ojson = nlohmann::ordered_json;

std::string_view to_string(AffectState s) noexcept {
  switch (s) {
    case AffectState::focused: return "Focused";
    case AffectState::anxious: return "Anxious";
    case AffectState::bored: return "Bored";
    case AffectState::confused: return "Confused";
    case AffectState::frustrated: return "Frustrated";
    case AffectState::other: return "Other";
  }
  return "Other";
}

std::optional<AffectState> parse_affect_state(std::string_view s) noexcept {
  for (auto st : kAffectStates) {
    auto name = to_string(st);
    if (name.size() != s.size()) continue;
    bool same = true;
    for (std::size_t i = 0; i < s.size(); ++i)
      same = same && std::tolower(static_cast<unsigned char>(s[i])) == std::tolower(static_cast<unsigned char>(name[i]));
    if (same) return st;
  }
  return std::nullopt;
}

namespace {

struct KindName {
  std::string_view operator()(const ParticipantEnrolled&) const { return "participant_enrolled"; }
  std::string_view operator()(const SubmissionEvent&) const { return "submission"; }
  std::string_view operator()(const FeedbackClick&) const { return "feedback_click"; }
  std::string_view operator()(const HintShown&) const { return "hint_shown"; }
  std::string_view operator()(const HintRating&) const { return "hint_rating"; }
  std::string_view operator()(const AffectPromptShown&) const { return "affect_prompt_shown"; }
  std::string_view operator()(const AffectResponse&) const { return "affect_response"; }
  std::string_view operator()(const HintSkipped&) const { return "hint_skipped"; }
};

struct ToJson {
  ojson operator()(const ParticipantEnrolled& p) const {
    return ojson{{"participant", p.participant},
                 {"condition", to_string(p.condition)},
                 {"pretest_score", p.pretest_score},
                 {"consent", p.consent}};
  }
  ojson operator()(const SubmissionEvent& s) const {
    ojson j{{"submission_id", s.submission_id},
            {"participant", s.participant},
            {"assignment", s.assignment},
            {"attempt_index", s.attempt_index},
            {"outcome", to_string(s.outcome)},
            {"score", s.score},
            {"code_digest", s.code_digest},
            {"hints_enabled", s.hints_enabled},
            {"compiler_output", s.compiler_output}};
    if (s.code) j["code"] = *s.code;
    return j;
  }
  ojson operator()(const FeedbackClick& c) const {
    return ojson{{"participant", c.participant}, {"submission_id", c.submission_id}, {"spec_name", c.spec_name}};
  }
  ojson operator()(const HintShown& h) const {
    return ojson{{"hint_id", h.hint_id},           {"participant", h.participant}, {"submission_id", h.submission_id},
                 {"scenario", h.scenario},         {"token_estimate", h.token_estimate},
                 {"latency_ms", h.latency_ms},     {"retries", h.retries}};
  }
  ojson operator()(const HintRating& r) const {
    return ojson{{"hint_id", r.hint_id}, {"participant", r.participant}, {"value", r.value}};
  }
  ojson operator()(const AffectPromptShown& a) const {
    return ojson{{"participant", a.participant}, {"submission_id", a.submission_id}};
  }
  ojson operator()(const AffectResponse& a) const {
    return ojson{{"participant", a.participant}, {"submission_id", a.submission_id}, {"state", to_string(a.state)}};
  }
  ojson operator()(const HintSkipped& h) const {
    return ojson{{"participant", h.participant}, {"submission_id", h.submission_id}, {"reason", h.reason}};
  }
};

[[noreturn]] void corrupt(std::string_view what) { fail(Errc::corrupt_log, std::string(what)); }

template <class T>
T get(const ojson& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) corrupt(fmt::format("missing field '{}'", key));
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    corrupt(fmt::format("field '{}' has the wrong type", key));
  }
}

EventPayload payload_from_json(std::string_view kind, const ojson& p) {
  if (kind == "participant_enrolled") {
    auto cond = parse_condition(get<std::string>(p, "condition"));
    if (!cond) corrupt("unknown condition");
    return ParticipantEnrolled{get<std::string>(p, "participant"), *cond, get<int>(p, "pretest_score"),
                               get<bool>(p, "consent")};
  }
  if (kind == "submission") {
    auto outcome = parse_outcome_class(get<std::string>(p, "outcome"));
    if (!outcome) corrupt("unknown outcome class");
    SubmissionEvent s{get<std::string>(p, "submission_id"),
                      get<std::string>(p, "participant"),
                      get<std::string>(p, "assignment"),
                      get<int>(p, "attempt_index"),
                      *outcome,
                      get<double>(p, "score"),
                      get<std::string>(p, "code_digest"),
                      get<bool>(p, "hints_enabled"),
                      get<std::string>(p, "compiler_output"),
                      std::nullopt};
    if (p.contains("code")) s.code = get<std::string>(p, "code");
    return s;
  }
  if (kind == "feedback_click")
    return FeedbackClick{get<std::string>(p, "participant"), get<std::string>(p, "submission_id"),
                         get<std::string>(p, "spec_name")};
  if (kind == "hint_shown")
    return HintShown{get<std::string>(p, "hint_id"),       get<std::string>(p, "participant"),
                     get<std::string>(p, "submission_id"), get<std::string>(p, "scenario"),
                     get<int>(p, "token_estimate"),        get<std::int64_t>(p, "latency_ms"),
                     get<int>(p, "retries")};
  if (kind == "hint_rating")
    return HintRating{get<std::string>(p, "hint_id"), get<std::string>(p, "participant"), get<int>(p, "value")};
  if (kind == "affect_prompt_shown")
    return AffectPromptShown{get<std::string>(p, "participant"), get<std::string>(p, "submission_id")};
  if (kind == "affect_response") {
    auto st = parse_affect_state(get<std::string>(p, "state"));
    if (!st) corrupt("unknown affect state");
    return AffectResponse{get<std::string>(p, "participant"), get<std::string>(p, "submission_id"), *st};
  }
  if (kind == "hint_skipped")
    return HintSkipped{get<std::string>(p, "participant"), get<std::string>(p, "submission_id"),
                       get<std::string>(p, "reason")};
  corrupt(fmt::format("unknown event kind '{}'", kind));
}

}  // namespace

std::string_view kind_name(const EventPayload& payload) noexcept { return std::visit(KindName{}, payload); }

std::string serialize_event(const Event& e) {
  ojson j;
  j["seq"] = e.seq;
  j["ts"] = format_rfc3339(e.ts);
  j["kind"] = kind_name(e.payload);
  j["payload"] = std::visit(ToJson{}, e.payload);
  return j.dump();
}

Event parse_event(std::string_view line) {
  ojson j;
  try {
    j = ojson::parse(line);
  } catch (const nlohmann::json::exception& ex) {
    corrupt(fmt::format("not valid JSON: {}", ex.what()));
  }
  if (!j.is_object()) corrupt("event is not an object");
  Event e;
  e.seq = get<std::uint64_t>(j, "seq");
  try {
    e.ts = parse_rfc3339(get<std::string>(j, "ts"));
  } catch (const Error&) {
    corrupt("bad timestamp");
  }
  auto payload = j.find("payload");
  if (payload == j.end() || !payload->is_object()) corrupt("missing payload object");
  e.payload = payload_from_json(get<std::string>(j, "kind"), *payload);
  return e;
}

// ---------------------------------------------------------------------------

EventLog::EventLog(const Clock& clock) : clock_(clock) {}

EventLog::EventLog(const Clock& clock, const std::filesystem::path& sink) : clock_(clock) {
  if (std::filesystem::exists(sink)) events_ = replay_event_log_file(sink);
  sink_.emplace(sink, std::ios::app | std::ios::binary);
  if (!*sink_) fail(Errc::invalid_argument, fmt::format("cannot open event log {}", sink.string()));
}

Event EventLog::append(EventPayload payload) {
  std::lock_guard lock(mu_);
  Event e;
  e.seq = events_.empty() ? 1 : events_.back().seq + 1;
  e.ts = clock_.now();
  e.payload = std::move(payload);
  if (sink_ && healthy_) {
    *sink_ << serialize_event(e) << '\n';
    sink_->flush();
    if (!*sink_) healthy_ = false;
  }
  events_.push_back(e);
  return e;
}

std::vector<Event> EventLog::snapshot() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::size_t EventLog::size() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

bool EventLog::healthy() const {
  std::lock_guard lock(mu_);
  return healthy_;
}

std::string EventLog::to_jsonl() const {
  std::ostringstream out;
  write_event_log(out, snapshot());
  return out.str();
}

void write_event_log(std::ostream& out, const std::vector<Event>& events) {
  for (const auto& e : events) out << serialize_event(e) << '\n';
}

std::vector<Event> replay_event_log(std::istream& in) {
  std::vector<Event> events;
  std::map<std::pair<std::string, std::string>, int> attempts;
  std::map<std::string, std::set<std::string>> prompts;    // participant -> submissions with a prompt
  std::set<std::pair<std::string, std::string>> answered;  // (participant, submission)
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Event e;
    try {
      e = parse_event(line);
    } catch (const Error& err) {
      fail(Errc::corrupt_log, fmt::format("line {}: {}", line_no, err.what()));
    }
    if (!events.empty() && e.seq <= events.back().seq)
      fail(Errc::invariant_violation,
           fmt::format("line {}: seq {} does not follow {}", line_no, e.seq, events.back().seq));
    if (auto* s = std::get_if<SubmissionEvent>(&e.payload)) {
      int expected = ++attempts[{s->participant, s->assignment}];
      if (s->attempt_index != expected)
        fail(Errc::invariant_violation, fmt::format("line {}: attempt_index {} for {}/{}, expected {}", line_no,
                                                    s->attempt_index, s->participant, s->assignment, expected));
    } else if (auto* p = std::get_if<AffectPromptShown>(&e.payload)) {
      prompts[p->participant].insert(p->submission_id);
    } else if (auto* r = std::get_if<AffectResponse>(&e.payload)) {
      if (!prompts[r->participant].contains(r->submission_id))
        fail(Errc::invariant_violation, fmt::format("line {}: affect response without a prompt", line_no));
      if (!answered.insert({r->participant, r->submission_id}).second)
        fail(Errc::invariant_violation, fmt::format("line {}: second affect response to one prompt", line_no));
    }
    events.push_back(std::move(e));
  }
  return events;
}

std::vector<Event> replay_event_log_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::not_found, fmt::format("cannot open event log {}", path.string()));
  return replay_event_log(in);
}

}  // namespace gradehint
