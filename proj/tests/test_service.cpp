#include <doctest.h>

#include <httplib.h>

#include <algorithm>
#include <thread>

#include "gradehint/service.hpp"
#include "support.hpp"

using namespace gradehint;
using testing::fixtures;
using testing::slurp;
using json = nlohmann::json;
using namespace std::chrono_literals;

namespace {

std::string variant(const std::string& task, const std::string& name) {
  return slurp(fixtures() / "bundle" / task / "variants" / (name + ".cs"));
}

AuthTable auth_table() {
  return AuthTable::from_json(json::parse(R"({
    "tokens": {"t-ctl": {"participant": "ctl"}, "t-exp": {"participant": "exp"},
               "t-ghost": {"participant": "ghost"}, "t-admin": {"admin": true}},
    "participants": []})"));
}

struct Rig {
  explicit Rig(std::shared_ptr<CompletionClient> client = std::make_shared<MockCompletionClient>(),
               double affect = 0.0)
      : clock(testing::at("2023-03-01T10:00:00Z")),
        log(clock),
        platform(load_assignment_bundle(fixtures() / "bundle"), std::make_shared<MockBackend>(), std::move(client),
                 clock, log, config(affect)),
        service(platform, auth_table()) {
    platform.enroll({"ctl", Condition::control, 3, true});
    platform.enroll({"exp", Condition::experimental, 5, true});
  }
  static PlatformConfig config(double affect) {
    PlatformConfig c;
    c.affect_probability = affect;
    return c;
  }

  ApiResponse call(std::string method, std::string path, std::string token, std::string body = "",
                   std::map<std::string, std::string> query = {}) {
    return service.handle(ApiRequest{std::move(method), std::move(path),
                                     token.empty() ? "" : "Bearer " + token, std::move(body), std::move(query)});
  }
  json submit(const std::string& token, const std::string& task, const std::string& code, int expect = 200) {
    auto r = call("POST", "/submissions", token, json{{"assignment_id", task}, {"code", code}}.dump());
    CHECK_MESSAGE(r.status == expect, r.body);
    return json::parse(r.body);
  }

  ManualClock clock;
  EventLog log;
  Platform platform;
  Service service;
};

}  // namespace

TEST_SUITE("service") {

TEST_CASE("authentication and roles") {
  Rig rig;
  CHECK(rig.call("GET", "/assignments", "").status == 401);
  CHECK(rig.service.handle({"GET", "/assignments", "Basic abc", "", {}}).status == 401);
  CHECK(rig.call("GET", "/assignments", "wrong").status == 401);
  CHECK(rig.call("GET", "/assignments", "t-admin").status == 403);
  CHECK(rig.call("GET", "/assignments", "t-ghost").status == 403);
  CHECK(rig.call("GET", "/admin/report", "t-exp").status == 403);
  CHECK(rig.call("GET", "/admin/report", "t-admin").status == 200);
  CHECK(rig.call("GET", "/nowhere", "t-exp").status == 404);
  CHECK(rig.call("DELETE", "/assignments", "t-exp").status == 404);
}

TEST_CASE("assignment listing shows the hint flag per condition") {
  Rig rig;
  auto e = json::parse(rig.call("GET", "/assignments", "t-exp").body)["assignments"];
  auto c = json::parse(rig.call("GET", "/assignments", "t-ctl").body)["assignments"];
  REQUIRE(e.size() == 6);
  CHECK(e[0]["id"] == "a01-user");
  CHECK(e[0]["hints"] == true);
  CHECK(e[5]["hints"] == false);
  CHECK(e[5]["tier"] == "capstone");
  for (const auto& a : c) CHECK(a["hints"] == false);
  auto one = json::parse(rig.call("GET", "/assignments/a01-user", "t-exp").body);
  CHECK(one["body"] == slurp(fixtures() / "bundle" / "a01-user" / "body.md"));
  CHECK(one["tests"].size() == 8);
  CHECK(rig.call("GET", "/assignments/zzz", "t-exp").status == 404);
}

TEST_CASE("submission validation") {
  Rig rig;
  CHECK(rig.call("POST", "/submissions", "t-exp", "not json").status == 422);
  CHECK(rig.call("POST", "/submissions", "t-exp", "[1]").status == 422);
  CHECK(rig.call("POST", "/submissions", "t-exp", R"({"assignment_id":"a01-user"})").status == 422);
  CHECK(rig.call("POST", "/submissions", "t-exp", R"({"assignment_id":"zz","code":"x"})").status == 404);
  CHECK(rig.call("POST", "/submissions", "t-exp", R"({"assignment_id":"a01-user","code":" \n "})").status == 422);
  CHECK(rig.call("POST", "/submissions", "t-ghost", R"({"assignment_id":"a01-user","code":"x"})").status == 403);
}

TEST_CASE("full participant flow over the API") {
  Rig rig(std::make_shared<MockCompletionClient>(), 1.0);
  auto s = rig.submit("t-exp", "a01-user", variant("a01-user", "failing"));
  CHECK(s["outcome"] == "TestFailure");
  CHECK(s["attempt_index"] == 1);
  CHECK(s["hint_pending"] == true);
  CHECK(s["affect_prompt"] == true);
  CHECK(s["affect_options"].size() == 6);
  std::string sid = s["submission_id"];

  rig.platform.wait_for_hints();
  auto h = rig.call("GET", "/submissions/" + sid + "/hint", "t-exp");
  REQUIRE(h.status == 200);
  auto hj = json::parse(h.body);
  CHECK(hj["status"] == "ready");
  CHECK(hj["rating"]["scale"].size() == 5);
  CHECK(hj["rating"]["scale"][0] == "Not useful at all");
  CHECK(hj["rating"]["value"].is_null());
  std::string hid = hj["hint_id"];

  CHECK(rig.call("GET", "/submissions/" + sid + "/hint", "t-ctl").status == 404);
  CHECK(rig.call("POST", "/hints/" + hid + "/rating", "t-exp", R"({"value":6})").status == 422);
  CHECK(rig.call("POST", "/hints/" + hid + "/rating", "t-exp", R"({"value":"5"})").status == 422);
  CHECK(rig.call("POST", "/hints/" + hid + "/rating", "t-exp", R"({"value":5})").status == 201);
  CHECK(rig.call("POST", "/hints/" + hid + "/rating", "t-exp", R"({"value":4})").status == 409);
  CHECK(json::parse(rig.call("GET", "/submissions/" + sid + "/hint", "t-exp").body)["rating"]["value"] == 5);

  std::string red, green;
  for (const auto& e : s["feedback"]["test_entries"]) (e["color"] == "red" ? red : green) = e["spec_name"];
  CHECK(rig.call("POST", "/submissions/" + sid + "/feedback-clicks", "t-exp", json{{"spec_name", red}}.dump()).status ==
        201);
  CHECK(rig.call("POST", "/submissions/" + sid + "/feedback-clicks", "t-exp", json{{"spec_name", green}}.dump())
            .status == 409);
  CHECK(rig.call("POST", "/submissions/" + sid + "/feedback-clicks", "t-exp", "{}").status == 422);

  CHECK(rig.call("POST", "/affect", "t-exp", R"({"state":"sleepy"})").status == 422);
  auto a = rig.call("POST", "/affect", "t-exp", R"({"state":"confused"})");
  CHECK(a.status == 201);
  CHECK(json::parse(a.body)["state"] == "Confused");
  CHECK(rig.call("POST", "/affect", "t-exp", R"({"state":"bored"})").status == 409);
  CHECK(rig.call("POST", "/affect", "t-ctl", R"({"state":"bored"})").status == 409);
}

TEST_CASE("hint polling states") {
  using Step = ScriptedCompletionClient::Step;
  auto slow = std::make_shared<ScriptedCompletionClient>(std::vector<Step>{{Step::Kind::reply, "ok"}}, 10s);
  Rig rig(slow);
  auto s = rig.submit("t-exp", "a02-calculator", variant("a02-calculator", "failing"));
  auto pending = rig.call("GET", "/submissions/" + s["submission_id"].get<std::string>() + "/hint", "t-exp");
  CHECK(pending.status == 202);
  CHECK(json::parse(pending.body)["status"] == "pending");

  auto c = rig.submit("t-ctl", "a02-calculator", variant("a02-calculator", "failing"));
  CHECK(c["hint_pending"] == false);
  auto none = rig.call("GET", "/submissions/" + c["submission_id"].get<std::string>() + "/hint", "t-ctl");
  CHECK(none.status == 200);
  CHECK(json::parse(none.body)["status"] == "unavailable");
  CHECK(json::parse(none.body)["reason"] == "not_eligible");
}

TEST_CASE("submit latency does not depend on the completion client") {
  using Step = ScriptedCompletionClient::Step;
  auto slow = std::make_shared<ScriptedCompletionClient>(std::vector<Step>{{Step::Kind::reply, "ok"}}, 10s);
  Rig rig(slow);
  std::vector<double> ms;
  for (int i = 0; i < 20; ++i) {
    auto start = std::chrono::steady_clock::now();
    rig.submit("t-exp", "a03-bank-account", variant("a03-bank-account", i % 2 ? "failing" : "compile_error"));
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(ms.begin(), ms.end());
  MESSAGE(fmt::format("submit latency median {:.2f} ms, max {:.2f} ms", ms[10], ms.back()));
  CHECK(ms.back() < 1000.0);
}

TEST_CASE("report export equals the offline report") {
  Rig rig(std::make_shared<MockCompletionClient>(), 1.0);
  for (const char* v : {"failing", "compile_error", "correct"}) {
    rig.submit("t-exp", "a01-user", variant("a01-user", v));
    rig.submit("t-ctl", "a01-user", variant("a01-user", v));
  }
  rig.platform.wait_for_hints();
  auto offline = build_report(rig.log.snapshot());
  for (const auto& [name, body] : offline.files) {
    auto r = rig.call("GET", "/admin/report", "t-admin", "", {{"file", name}});
    CHECK(r.status == 200);
    CHECK(r.body == body);
    CHECK(r.content_type == (name.ends_with(".csv") ? "text/csv" : "application/json"));
  }
  CHECK(rig.call("GET", "/admin/report", "t-admin", "", {{"file", "x.csv"}}).status == 404);
  CHECK(rig.call("GET", "/admin/report", "t-admin", "", {{"log", "archive"}}).status == 404);
}

TEST_CASE("roster enrollment from the auth table") {
  ManualClock clock(testing::at("2023-03-01T10:00:00Z"));
  EventLog log(clock);
  Platform platform(load_assignment_bundle(fixtures() / "bundle"), std::make_shared<MockBackend>(),
                    std::make_shared<MockCompletionClient>(), clock, log);
  auto table = AuthTable::from_json(json::parse(R"({"tokens": {"a": {"participant": "p1"}},
      "participants": [{"id": "p1", "pretest": 4}, {"id": "p2", "pretest": 1}, {"id": "p3", "pretest": 0}]})"));
  Service service(platform, table);
  service.enroll_missing(9);
  service.enroll_missing(9);
  CHECK(log.size() == 3);
  CHECK(platform.participant("p1")->pretest_score == 4);
  CHECK_THROWS(AuthTable::from_json(json::parse(R"({"tokens": {"a": {}}})")));
  CHECK_THROWS(AuthTable::from_json(json::parse(R"([])")));
}

TEST_CASE("real HTTP server round trip") {
  Rig rig;
  httplib::Server server;
  rig.service.mount(server);
  int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  httplib::Headers auth{{"Authorization", "Bearer t-exp"}};
  auto list = client.Get("/v1/assignments", auth);
  REQUIRE(list);
  CHECK(list->status == 200);
  CHECK(json::parse(list->body)["assignments"].size() == 6);
  auto post = client.Post("/v1/submissions", auth,
                          json{{"assignment_id", "a02-calculator"}, {"code", variant("a02-calculator", "correct")}}.dump(),
                          "application/json");
  REQUIRE(post);
  CHECK(post->status == 200);
  CHECK(json::parse(post->body)["score"] == 100.0);
  auto denied = client.Get("/v1/assignments");
  REQUIRE(denied);
  CHECK(denied->status == 401);
  auto report = client.Get("/v1/admin/report?file=curves.csv", httplib::Headers{{"Authorization", "Bearer t-admin"}});
  REQUIRE(report);
  CHECK(report->status == 200);
  CHECK(report->get_header_value("Content-Type") == "text/csv");
  CHECK(report->body.starts_with("filter,group,attempt"));
  server.stop();
  th.join();
}

}  // TEST_SUITE
