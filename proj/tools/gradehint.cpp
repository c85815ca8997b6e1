// gradehint command-line tool: serve, simulate, analyze.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <httplib.h>

#include "gradehint/error.hpp"
#include "gradehint/report.hpp"
#include "gradehint/service.hpp"
#include "gradehint/simulator.hpp"

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string bundle;
  std::string llm;
  std::string mock_dir;
  std::uint64_t seed = 1;
  std::string auth;
  std::string log = "events.jsonl";
  std::string backend = "mock";
  std::string subprocess_config;
  std::string tokenizer = "heuristic";
  double affect_probability = 1.0 / 3.0;
};

int serve(const ServeArgs& a) {
  using namespace gradehint;
  auto assignments = load_assignment_bundle(a.bundle);
  std::shared_ptr<const LanguageBackend> backend;
  if (a.backend == "mock") backend = std::make_shared<MockBackend>();
  else backend = std::make_shared<SubprocessBackend>(SubprocessConfig::from_json_file(a.subprocess_config));

  std::string mode = a.llm.empty() ? env_or("LLM_MODE", "mock") : a.llm;
  std::shared_ptr<CompletionClient> client;
  if (mode == "live") client = LiveCompletionClient::from_environment();
  else if (mode == "mock")
    client = std::make_shared<MockCompletionClient>(a.mock_dir.empty() ? std::nullopt
                                                                        : std::optional<std::filesystem::path>(a.mock_dir));
  else fail(Errc::invalid_argument, fmt::format("unknown LLM mode '{}'", mode));

  static SystemClock clock;
  EventLog log(clock, a.log);
  PlatformConfig pc;
  pc.seed = a.seed;
  pc.affect_probability = a.affect_probability;
  pc.prompt.estimator = make_token_estimator(a.tokenizer);
  Platform platform(std::move(assignments), backend, client, clock, log, pc);
  Service service(platform, AuthTable::from_json_file(a.auth));
  service.enroll_missing(a.seed);

  httplib::Server server;
  service.mount(server);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << fmt::format("gradehint: {} assignments, backend {}, llm {}, listening on {}:{}\n",
                           platform.assignments().size(), backend->name(), mode, a.host, a.port);
  if (!server.listen(a.host, a.port)) {
    std::cerr << fmt::format("gradehint: cannot listen on {}:{}\n", a.host, a.port);
    return 1;
  }
  platform.wait_for_hints();
  return 0;
}

int grade(const std::string& bundle, const std::string& id, const std::string& code_path) {
  using namespace gradehint;
  auto assignments = load_assignment_bundle(bundle);
  auto it = std::find_if(assignments.begin(), assignments.end(), [&](const auto& a) { return a.id == id; });
  if (it == assignments.end()) fail(Errc::not_found, fmt::format("unknown assignment '{}'", id));
  std::ifstream in(code_path, std::ios::binary);
  std::string code((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  MockBackend backend;
  auto ev = evaluate_submission(code, it->suite, backend);
  nlohmann::ordered_json j{{"outcome", to_string(ev.outcome)}, {"score", ev.score}};
  j["feedback"] = to_json(assemble_feedback_view(ev.outcome, ev.compile, ev.results));
  if (ev.fault)
    j["fault"] = {{"type", ev.fault->exception_type}, {"message", ev.fault->message}, {"during", ev.fault->during}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Automated grading with LLM hints: server, cohort simulator and analysis"};
  app.require_subcommand(1);

  ServeArgs sa;
  auto* s = app.add_subcommand("serve", "Run the HTTP API");
  s->add_option("--bundle", sa.bundle, "Assignment bundle directory or tar archive")->required();
  s->add_option("--auth", sa.auth, "Token table JSON")->required();
  s->add_option("--host", sa.host, "Bind address");
  s->add_option("--port", sa.port, "Port");
  s->add_option("--llm", sa.llm, "Completion client: mock or live (default: $LLM_MODE, else mock)")
      ->check(CLI::IsMember({"mock", "live"}));
  s->add_option("--mock-dir", sa.mock_dir, "Fixture directory for the mock completion client");
  s->add_option("--seed", sa.seed, "Seed for condition assignment and affect sampling");
  s->add_option("--log", sa.log, "Event log file (appended, replayed on start)");
  s->add_option("--backend", sa.backend, "Language backend")->check(CLI::IsMember({"mock", "subprocess"}));
  s->add_option("--subprocess-config", sa.subprocess_config, "Toolchain JSON for the subprocess backend");
  s->add_option("--tokenizer", sa.tokenizer, "heuristic or bpe:<rank file>");
  s->add_option("--affect-probability", sa.affect_probability, "Chance of the affect survey per submission");

  gradehint::SimulationConfig sim;
  std::string sim_bundle, sim_log, sim_report;
  auto* m = app.add_subcommand("simulate", "Run a scripted cohort and write its event log");
  m->add_option("--students", sim.students, "Cohort size");
  m->add_option("--seed", sim.seed, "Seed");
  m->add_option("--bundle", sim_bundle, "Assignment bundle with code variants")->required();
  m->add_option("--log", sim_log, "Event log to create")->required();
  m->add_option("--report", sim_report, "Also write the report computed from the live log here");
  m->add_option("--max-attempts", sim.max_attempts, "Attempts per task before giving up");

  std::string an_log, an_out;
  auto* z = app.add_subcommand("analyze", "Compute the report from an event log");
  z->add_option("--log", an_log, "Event log (JSONL)")->required();
  z->add_option("--out", an_out, "Output directory")->required();

  std::string gr_bundle, gr_task, gr_code;
  auto* g = app.add_subcommand("grade", "Grade one source file with the mock backend and print the evaluation");
  g->add_option("--bundle", gr_bundle, "Assignment bundle")->required();
  g->add_option("--assignment", gr_task, "Assignment id")->required();
  g->add_option("--code", gr_code, "Source file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*s) return serve(sa);
    if (*m) {
      auto run = gradehint::run_simulation(sim_bundle, sim, sim_log);
      if (!sim_report.empty()) gradehint::write_report(sim_report, run.online_report);
      const auto& r = run.summary;
      std::cout << fmt::format(
          "participants {} submissions {} hints {} ratings {} clicks {} affect {} events {}\n", r.participants,
          r.submissions, r.hints_shown, r.ratings, r.clicks, r.affect_responses, run.events.size());
      return 0;
    }
    if (*g) return grade(gr_bundle, gr_task, gr_code);
    if (*z) {
      auto events = gradehint::replay_event_log_file(an_log);
      gradehint::write_report(an_out, gradehint::build_report(events));
      return 0;
    }
  } catch (const gradehint::Error& e) {
    std::cerr << fmt::format("gradehint: {}: {}\n", gradehint::to_string(e.code()), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "gradehint: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
