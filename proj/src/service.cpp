#include "gradehint/service.hpp"

#include <fstream>

#include <fmt/format.h>
#include <httplib.h>

#include "gradehint/error.hpp"

namespace gradehint {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

const std::vector<std::string>& rating_labels() {
  static const std::vector<std::string> labels = {"Not useful at all", "Slightly useful", "Moderately useful",
                                                  "Very useful", "Extremely useful"};
  return labels;
}

AuthTable AuthTable::from_json(const json& j) {
  auto bad = [](const std::string& why) { fail(Errc::invalid_argument, "auth config: " + why); };
  if (!j.is_object()) bad("expected an object");
  AuthTable t;
  if (auto it = j.find("tokens"); it != j.end()) {
    if (!it->is_object()) bad("'tokens' must be an object");
    for (const auto& [tok, v] : it->items()) {
      if (tok.empty() || !v.is_object()) bad(fmt::format("token entry '{}' is malformed", tok));
      Principal p;
      p.admin = v.value("admin", false);
      if (!p.admin) {
        auto pid = v.find("participant");
        if (pid == v.end() || !pid->is_string() || pid->get<std::string>().empty())
          bad(fmt::format("token '{}' names neither a participant nor an admin", tok));
        p.participant = pid->get<std::string>();
      }
      t.tokens.emplace(tok, std::move(p));
    }
  }
  if (auto it = j.find("participants"); it != j.end()) {
    if (!it->is_array()) bad("'participants' must be an array");
    for (const auto& p : *it) {
      if (!p.is_object() || !p.contains("id") || !p["id"].is_string()) bad("participant entries need a string 'id'");
      t.roster.push_back(p["id"].get<std::string>());
      t.pretest_scores.push_back(p.value("pretest", 0));
    }
  }
  return t;
}

AuthTable AuthTable::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::not_found, fmt::format("cannot open {}", path.string()));
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    fail(Errc::invalid_argument, fmt::format("{}: {}", path.string(), e.what()));
  }
}

const Principal* AuthTable::find(std::string_view token) const {
  auto it = tokens.find(token);
  return it == tokens.end() ? nullptr : &it->second;
}

namespace {

ApiResponse reply(int status, const ojson& body) { return {status, "application/json", body.dump()}; }

ApiResponse problem(int status, std::string_view code, std::string_view message) {
  return reply(status, ojson{{"error", code}, {"message", message}});
}

int status_for(Errc c) {
  switch (c) {
    case Errc::invalid_argument:
    case Errc::out_of_range: return 422;
    case Errc::not_found: return 404;
    case Errc::backend_unavailable: return 503;
    case Errc::compile_timeout: return 504;
    case Errc::not_clickable:
    case Errc::already_rated:
    case Errc::no_pending_prompt:
    case Errc::duplicate_response: return 409;
    default: return 500;
  }
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    std::size_t j = path.find('/', i);
    if (j == std::string_view::npos) j = path.size();
    if (j > i) parts.emplace_back(path.substr(i, j - i));
    i = j;
  }
  return parts;
}

std::optional<json> parse_body(const std::string& body) {
  try {
    auto j = json::parse(body);
    if (j.is_object()) return j;
  } catch (const json::exception&) {
  }
  return std::nullopt;
}

std::optional<std::string> string_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace

Service::Service(Platform& platform, AuthTable auth, ReportOptions report_options)
    : platform_(platform), auth_(std::move(auth)), report_options_(std::move(report_options)) {}

void Service::enroll_missing(std::uint64_t seed) {
  std::vector<std::string> ids;
  std::vector<int> scores;
  for (std::size_t i = 0; i < auth_.roster.size(); ++i) {
    if (platform_.participant(auth_.roster[i])) continue;
    ids.push_back(auth_.roster[i]);
    scores.push_back(auth_.pretest_scores[i]);
  }
  if (!ids.empty()) platform_.enroll_roster(ids, scores, seed);
}

ApiResponse Service::handle(const ApiRequest& req) {
  constexpr std::string_view kBearer = "Bearer ";
  std::string_view auth = req.authorization;
  if (auth.substr(0, kBearer.size()) != kBearer) return problem(401, "unauthorized", "missing bearer token");
  const Principal* who = auth_.find(auth.substr(kBearer.size()));
  if (!who) return problem(401, "unauthorized", "unknown token");
  try {
    return route(req, *who);
  } catch (const Error& e) {
    return problem(status_for(e.code()), to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    return problem(500, "internal", e.what());
  }
}

ApiResponse Service::route(const ApiRequest& req, const Principal& who) {
  auto parts = split_path(req.path);
  const bool get = req.method == "GET", post = req.method == "POST";
  if (parts.size() == 2 && parts[0] == "admin" && parts[1] == "report" && get) return get_report(who, req.query);
  if (who.admin) return problem(403, "forbidden", "admin tokens cannot act as a participant");

  if (parts.size() == 1 && parts[0] == "assignments" && get) return list_assignments(who);
  if (parts.size() == 2 && parts[0] == "assignments" && get) return get_assignment(who, parts[1]);
  if (parts.size() == 1 && parts[0] == "submissions" && post) return post_submission(who, req.body);
  if (parts.size() == 3 && parts[0] == "submissions" && parts[2] == "hint" && get) return get_hint(who, parts[1]);
  if (parts.size() == 3 && parts[0] == "submissions" && parts[2] == "feedback-clicks" && post)
    return post_click(who, parts[1], req.body);
  if (parts.size() == 3 && parts[0] == "hints" && parts[2] == "rating" && post)
    return post_rating(who, parts[1], req.body);
  if (parts.size() == 1 && parts[0] == "affect" && post) return post_affect(who, req.body);
  return problem(404, "not_found", fmt::format("no route for {} {}", req.method, req.path));
}

namespace {

ojson assignment_json(const Assignment& a, Condition c, bool with_body) {
  ojson j{{"id", a.id}, {"title", a.title}, {"tier", to_string(a.tier)}, {"hints", a.hint_policy.enabled_for(c)}};
  if (with_body) {
    j["body"] = a.body;
    ojson names = ojson::array();
    for (const auto& s : a.suite) names.push_back(s.name);
    j["tests"] = std::move(names);
  } else {
    j["tests"] = a.suite.size();
  }
  return j;
}

}  // namespace

ApiResponse Service::list_assignments(const Principal& who) {
  auto p = platform_.participant(who.participant);
  if (!p) return problem(403, "forbidden", "participant is not enrolled");
  ojson items = ojson::array();
  for (const auto& a : platform_.assignments()) items.push_back(assignment_json(a, p->condition, false));
  return reply(200, ojson{{"assignments", std::move(items)}});
}

ApiResponse Service::get_assignment(const Principal& who, const std::string& id) {
  auto p = platform_.participant(who.participant);
  if (!p) return problem(403, "forbidden", "participant is not enrolled");
  const Assignment* a = platform_.find_assignment(id);
  if (!a) return problem(404, "not_found", fmt::format("unknown assignment '{}'", id));
  return reply(200, assignment_json(*a, p->condition, true));
}

ApiResponse Service::post_submission(const Principal& who, const std::string& body) {
  auto p = platform_.participant(who.participant);
  if (!p || !p->consent) return problem(403, "forbidden", "participant is not enrolled or has not consented");
  auto j = parse_body(body);
  if (!j) return problem(422, "invalid_body", "expected a JSON object");
  auto assignment = string_field(*j, "assignment_id");
  auto code = string_field(*j, "code");
  if (!assignment || !code) return problem(422, "invalid_body", "assignment_id and code are required strings");
  if (!platform_.find_assignment(*assignment))
    return problem(404, "not_found", fmt::format("unknown assignment '{}'", *assignment));
  if (code->find_first_not_of(" \t\r\n") == std::string::npos) return problem(422, "empty_code", "code is empty");

  auto out = platform_.submit(who.participant, *assignment, std::move(*code));
  ojson r{{"submission_id", out.submission_id},
          {"score", out.evaluation.score},
          {"outcome", to_string(out.evaluation.outcome)},
          {"attempt_index", out.attempt_index},
          {"feedback", ojson::parse(to_json(out.feedback).dump())},
          {"hint_pending", out.hint_pending},
          {"affect_prompt", out.affect_prompt}};
  if (out.affect_prompt) {
    ojson states = ojson::array();
    for (auto s : kAffectStates) states.push_back(to_string(s));
    r["affect_options"] = std::move(states);
  }
  return reply(200, r);
}

ApiResponse Service::get_hint(const Principal& who, const std::string& submission_id) {
  auto st = platform_.hint_status(who.participant, submission_id);
  switch (st.state) {
    case HintState::pending:
      return reply(202, ojson{{"status", "pending"}, {"submission_id", submission_id}});
    case HintState::ready: {
      const HintRecord& h = *st.hint;
      ojson rating{{"question", "How useful was this hint?"}, {"scale", rating_labels()}};
      rating["value"] = h.rating ? ojson(*h.rating) : ojson(nullptr);
      return reply(200, ojson{{"status", "ready"},
                              {"submission_id", submission_id},
                              {"hint_id", h.id},
                              {"markup", h.response_markup},
                              {"rating", std::move(rating)}});
    }
    case HintState::not_requested:
    case HintState::skipped:
      break;
  }
  return reply(200, ojson{{"status", "unavailable"}, {"submission_id", submission_id}, {"reason", st.skip_reason}});
}

ApiResponse Service::post_rating(const Principal& who, const std::string& hint_id, const std::string& body) {
  auto j = parse_body(body);
  if (!j || !j->contains("value") || !(*j)["value"].is_number_integer())
    return problem(422, "invalid_body", "value must be an integer 1..5");
  auto h = platform_.rate_hint(who.participant, hint_id, (*j)["value"].get<int>());
  return reply(201, ojson{{"hint_id", h.id}, {"value", *h.rating}});
}

ApiResponse Service::post_click(const Principal& who, const std::string& submission_id, const std::string& body) {
  auto j = parse_body(body);
  if (!j) return problem(422, "invalid_body", "expected a JSON object");
  auto spec = string_field(*j, "spec_name");
  if (!spec) return problem(422, "invalid_body", "spec_name is required");
  auto c = platform_.record_feedback_click(who.participant, submission_id, *spec);
  return reply(201, ojson{{"submission_id", c.submission_id}, {"spec_name", c.spec_name},
                          {"ts", format_rfc3339(c.timestamp)}});
}

ApiResponse Service::post_affect(const Principal& who, const std::string& body) {
  auto j = parse_body(body);
  if (!j) return problem(422, "invalid_body", "expected a JSON object");
  auto name = string_field(*j, "state");
  auto state = name ? parse_affect_state(*name) : std::nullopt;
  if (!state) return problem(422, "invalid_state", "state must be one of the survey options");
  auto e = platform_.record_affect(who.participant, *state);
  const auto& resp = std::get<AffectResponse>(e.payload);
  return reply(201, ojson{{"submission_id", resp.submission_id}, {"state", to_string(resp.state)}});
}

ApiResponse Service::get_report(const Principal& who, const std::map<std::string, std::string>& query) {
  if (!who.admin) return problem(403, "forbidden", "admin token required");
  auto q = [&](const char* k, const char* dflt) {
    auto it = query.find(k);
    return it == query.end() ? std::string(dflt) : it->second;
  };
  if (q("log", "live") != "live") return problem(404, "not_found", "only the live log can be exported");
  if (!platform_.log().healthy()) return problem(409, "log_unavailable", "the event log sink has failed");
  auto events = platform_.log().snapshot();
  auto bundle = build_report(events, report_options_);
  const std::string name = q("file", "report.json");
  auto it = bundle.files.find(name);
  if (it == bundle.files.end()) return problem(404, "not_found", fmt::format("report has no file '{}'", name));
  bool csv = name.size() > 4 && name.compare(name.size() - 4, 4, ".csv") == 0;
  return {200, csv ? "text/csv" : "application/json", it->second};
}

void Service::mount(httplib::Server& server) {
  auto bind = [this](const char* method) {
    return [this, method](const httplib::Request& req, httplib::Response& res) {
      ApiRequest r;
      r.method = method;
      r.path = req.matches.size() > 1 ? "/" + req.matches[1].str() : "/";
      r.authorization = req.get_header_value("Authorization");
      r.body = req.body;
      for (const auto& [k, v] : req.params) r.query.emplace(k, v);
      auto out = handle(r);
      res.status = out.status;
      res.set_content(out.body, out.content_type);
    };
  };
  server.Get(R"(/v1/(.*))", bind("GET"));
  server.Post(R"(/v1/(.*))", bind("POST"));
}

}  // namespace gradehint
