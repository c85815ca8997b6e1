#include "gradehint/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include <fmt/format.h>

#include "gradehint/digest.hpp"
#include "gradehint/error.hpp"

namespace gradehint {

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) fail(Errc::invalid_argument, "uniform_below needs a positive bound");
  // Reject the top partial bucket.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    std::uint64_t x = rng();
    if (x < limit) return x % bound;
  }
}

double uniform_unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

std::map<std::string, Condition> assign_condition(std::span<const std::string> roster, std::uint64_t seed) {
  if (roster.empty()) fail(Errc::invalid_argument, "roster is empty");
  std::vector<std::string> ids(roster.begin(), roster.end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size() - 1; i > 0; --i) std::swap(ids[i], ids[uniform_below(rng, i + 1)]);
  std::map<std::string, Condition> out;
  const std::size_t control = (ids.size() + 1) / 2;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!out.emplace(ids[i], i < control ? Condition::control : Condition::experimental).second)
      fail(Errc::invalid_argument, fmt::format("duplicate participant id '{}'", ids[i]));
  }
  return out;
}

AffectSampler::AffectSampler(double probability, std::uint64_t seed) : p_(probability), rng_(seed) {
  if (!(probability >= 0 && probability <= 1))
    fail(Errc::invalid_argument, fmt::format("affect probability {} is outside [0,1]", probability));
}

bool AffectSampler::draw() { return uniform_unit(rng_) < p_; }

// ---------------------------------------------------------------------------

Platform::Platform(std::vector<Assignment> assignments, std::shared_ptr<const LanguageBackend> backend,
                   std::shared_ptr<CompletionClient> client, const Clock& clock, EventLog& log, PlatformConfig config)
    : assignments_(std::move(assignments)),
      backend_(std::move(backend)),
      client_(std::move(client)),
      clock_(clock),
      log_(log),
      config_(std::move(config)),
      evaluator_(backend_, std::max<std::size_t>(1, config_.evaluation_workers), config_.limits),
      sampler_(config_.affect_probability, config_.seed ^ 0xaffec7ULL),
      hint_pool_(std::max<std::size_t>(1, config_.hint_concurrency)) {
  if (!client_) fail(Errc::invalid_argument, "platform needs a completion client");
  std::sort(assignments_.begin(), assignments_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  // Resume state from an existing log.
  for (const auto& e : log_.snapshot()) {
    if (auto* p = std::get_if<ParticipantEnrolled>(&e.payload)) {
      participants_[p->participant] = Participant{p->participant, p->condition, p->pretest_score, p->consent};
    } else if (auto* s = std::get_if<SubmissionEvent>(&e.payload)) {
      attempts_[{s->participant, s->assignment}] = s->attempt_index;
      ++next_submission_;
    }
  }
}

Platform::~Platform() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  stop_.notify_all();
  client_->cancel();
}

const Assignment* Platform::find_assignment(std::string_view id) const {
  auto it = std::lower_bound(assignments_.begin(), assignments_.end(), id,
                             [](const Assignment& a, std::string_view v) { return a.id < v; });
  return it != assignments_.end() && it->id == id ? &*it : nullptr;
}

void Platform::enroll(const Participant& p) {
  if (p.id.empty()) fail(Errc::invalid_argument, "participant id is empty");
  if (p.pretest_score < 0) fail(Errc::invalid_argument, "pretest score must be non-negative");
  {
    std::lock_guard lock(mu_);
    if (participants_.contains(p.id)) fail(Errc::invalid_argument, fmt::format("participant '{}' already enrolled", p.id));
    participants_[p.id] = p;
  }
  log_.append(ParticipantEnrolled{p.id, p.condition, p.pretest_score, p.consent});
}

std::vector<Participant> Platform::enroll_roster(std::span<const std::string> ids, std::span<const int> pretest_scores,
                                                 std::uint64_t seed) {
  if (!pretest_scores.empty() && pretest_scores.size() != ids.size())
    fail(Errc::invalid_argument, "one pretest score per participant is required");
  auto conditions = assign_condition(ids, seed);
  std::vector<Participant> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    Participant p{ids[i], conditions.at(ids[i]), pretest_scores.empty() ? 0 : pretest_scores[i], true};
    enroll(p);
    out.push_back(p);
  }
  return out;
}

std::optional<Participant> Platform::participant(std::string_view id) const {
  std::lock_guard lock(mu_);
  auto it = participants_.find(id);
  if (it == participants_.end()) return std::nullopt;
  return it->second;
}

std::mutex& Platform::lane(const std::string& participant, const std::string& assignment) {
  std::lock_guard lock(mu_);
  auto& slot = lanes_[{participant, assignment}];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

Platform::Prepared Platform::prepare(std::string_view participant_id, std::string_view assignment_id,
                                     std::string code) {
  auto who = participant(participant_id);
  if (!who) fail(Errc::not_found, fmt::format("unknown participant '{}'", participant_id));
  if (!who->consent) fail(Errc::invalid_argument, fmt::format("participant '{}' has not consented", participant_id));
  const Assignment* task = find_assignment(assignment_id);
  if (!task) fail(Errc::not_found, fmt::format("unknown assignment '{}'", assignment_id));

  std::lock_guard serial(lane(who->id, task->id));
  Evaluation eval = evaluator_.evaluate(code, task->suite);

  Prepared prep;
  SubmissionOutcome& out = prep.outcome;
  out.participant = who->id;
  out.assignment = task->id;
  out.feedback = assemble_feedback_view(eval.outcome, eval.compile, eval.results);

  bool gate = hint_gate(who->condition, *task, eval.outcome);
  std::string skip_reason;
  if (gate) {
    PromptDetail detail{eval.compile.diagnostics, eval.fault, eval.results};
    try {
      prep.prompt = build_prompt(*task, code, eval.outcome, detail, config_.prompt);
    } catch (const Error& e) {
      if (e.code() != Errc::budget_exceeded) throw;
      skip_reason = "budget_exceeded";
    }
  } else {
    skip_reason = "not_eligible";
  }

  {
    std::lock_guard lock(mu_);
    out.attempt_index = ++attempts_[{out.participant, out.assignment}];
    out.submission_id = fmt::format("s{:06}", next_submission_++);
    SubmissionRecord rec;
    rec.participant = out.participant;
    rec.feedback = out.feedback;
    if (prep.prompt) {
      rec.hint.state = HintState::pending;
      ++pending_hints_;
    } else {
      rec.hint.state = skip_reason == "not_eligible" ? HintState::not_requested : HintState::skipped;
      rec.hint.skip_reason = skip_reason;
    }
    submissions_[out.submission_id] = std::move(rec);

    SubmissionEvent ev;
    ev.submission_id = out.submission_id;
    ev.participant = out.participant;
    ev.assignment = out.assignment;
    ev.attempt_index = out.attempt_index;
    ev.outcome = eval.outcome;
    ev.score = eval.score;
    ev.code_digest = sha256_hex(code);
    ev.hints_enabled = task->hint_policy.experimental;
    ev.compiler_output = eval.compile.raw_output;
    if (config_.retain_code) ev.code = code;
    log_.append(std::move(ev));

    out.affect_prompt = sampler_.draw();
    auto& window = affect_[out.participant];
    window.latest_submission = out.submission_id;
    if (out.affect_prompt) {
      window.prompted_submission = out.submission_id;
      window.answered = false;
      log_.append(AffectPromptShown{out.participant, out.submission_id});
    }
    if (!prep.prompt) log_.append(HintSkipped{out.participant, out.submission_id, skip_reason});
  }
  out.hint_pending = prep.prompt.has_value();
  out.evaluation = std::move(eval);
  return prep;
}

std::optional<HintRecord> Platform::run_hint(const SubmissionOutcome& outcome, const Prompt& prompt) {
  HintGeneration gen;
  // Backoff waits end early at shutdown.
  auto sleeper = [this](std::chrono::milliseconds d) {
    std::unique_lock lock(mu_);
    stop_.wait_for(lock, d, [&] { return stopping_; });
  };
  try {
    gen = generate_hint(prompt, config_.params, *client_, clock_, "h" + outcome.submission_id.substr(1),
                        outcome.submission_id, config_.retry, sleeper);
  } catch (const std::exception& e) {
    gen.failure = Errc::client_transport;
    gen.failure_detail = e.what();
  }
  auto hint = gen.hint;
  finish_hint(outcome.submission_id, outcome.participant, std::move(gen));
  return hint;
}

namespace {

/// Wire name of a hint failure, e.g. "client_timeout".
std::string skip_reason_for(Errc code) {
  std::string out;
  for (char c : to_string(code)) {
    if (std::isupper(static_cast<unsigned char>(c))) {
      if (!out.empty()) out += '_';
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace

void Platform::finish_hint(const std::string& submission_id, const std::string& participant, HintGeneration gen) {
  std::lock_guard lock(mu_);
  auto& rec = submissions_[submission_id];
  if (gen.hint) {
    const HintRecord& h = *gen.hint;
    rec.hint.state = HintState::ready;
    rec.hint.hint = h;
    hints_[h.id] = h;
    hint_owner_[h.id] = participant;
    log_.append(HintShown{h.id, participant, submission_id, std::string(to_string(h.prompt.scenario)),
                          h.prompt.token_estimate, h.latency_ms, h.retries});
  } else {
    rec.hint.state = HintState::skipped;
    rec.hint.skip_reason = skip_reason_for(gen.failure.value_or(Errc::client_transport));
    log_.append(HintSkipped{participant, submission_id, rec.hint.skip_reason});
  }
  --pending_hints_;
  hints_done_.notify_all();
}

SubmissionOutcome Platform::submit(std::string_view participant_id, std::string_view assignment_id, std::string code) {
  auto prep = prepare(participant_id, assignment_id, std::move(code));
  if (prep.prompt) {
    hint_pool_.submit([this, outcome = prep.outcome, prompt = *prep.prompt] {
      run_hint(outcome, prompt);
    });
  }
  return std::move(prep.outcome);
}

std::pair<SubmissionOutcome, std::optional<HintRecord>> Platform::process_submission(std::string_view participant_id,
                                                                                     std::string_view assignment_id,
                                                                                     std::string code) {
  auto prep = prepare(participant_id, assignment_id, std::move(code));
  std::optional<HintRecord> hint;
  if (prep.prompt) hint = run_hint(prep.outcome, *prep.prompt);
  return {std::move(prep.outcome), std::move(hint)};
}

HintStatus Platform::hint_status(std::string_view participant_id, std::string_view submission_id) const {
  std::lock_guard lock(mu_);
  auto it = submissions_.find(submission_id);
  if (it == submissions_.end() || it->second.participant != participant_id)
    fail(Errc::not_found, fmt::format("unknown submission '{}'", submission_id));
  HintStatus s = it->second.hint;
  if (s.hint) {
    // Ratings live on the canonical record.
    s.hint = hints_.at(s.hint->id);
  }
  return s;
}

void Platform::wait_for_hints() {
  std::unique_lock lock(mu_);
  hints_done_.wait(lock, [&] { return pending_hints_ == 0; });
}

FeedbackClickEvent Platform::record_feedback_click(std::string_view participant_id, std::string_view submission_id,
                                                   std::string_view spec_name) {
  std::lock_guard lock(mu_);
  auto it = submissions_.find(submission_id);
  if (it == submissions_.end() || it->second.participant != participant_id)
    fail(Errc::not_found, fmt::format("unknown submission '{}'", submission_id));
  auto click = make_feedback_click(it->second.feedback, spec_name, std::string(participant_id),
                                   std::string(submission_id), clock_);
  log_.append(FeedbackClick{click.participant_id, click.submission_id, click.spec_name});
  return click;
}

HintRecord Platform::rate_hint(std::string_view participant_id, std::string_view hint_id, int value) {
  std::lock_guard lock(mu_);
  auto it = hints_.find(hint_id);
  if (it == hints_.end() || hint_owner_[it->first] != participant_id)
    fail(Errc::not_found, fmt::format("unknown hint '{}'", hint_id));
  record_rating(it->second, value);
  log_.append(HintRating{it->first, std::string(participant_id), value});
  return it->second;
}

Event Platform::record_affect(std::string_view participant_id, AffectState state) {
  std::lock_guard lock(mu_);
  auto it = affect_.find(participant_id);
  if (it == affect_.end() || !it->second.prompted_submission ||
      *it->second.prompted_submission != it->second.latest_submission)
    fail(Errc::no_pending_prompt, fmt::format("no affect prompt is pending for '{}'", participant_id));
  if (it->second.answered)
    fail(Errc::duplicate_response, fmt::format("the affect prompt for '{}' was already answered", participant_id));
  it->second.answered = true;
  return log_.append(AffectResponse{std::string(participant_id), it->second.latest_submission, state});
}

}  // namespace gradehint
