// Python bindings. Structured results cross the boundary as JSON text and are
// decoded by the package wrapper.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fmt/format.h>

#include "gradehint/feedback.hpp"
#include "gradehint/hint.hpp"
#include "gradehint/report.hpp"
#include "gradehint/simulator.hpp"
#include "gradehint/stats.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace gradehint;
using json = nlohmann::ordered_json;

namespace {

Assignment find_task(const fs::path& bundle, const std::string& id) {
  for (auto& a : load_assignment_bundle(bundle))
    if (a.id == id) return a;
  fail(Errc::not_found, fmt::format("unknown assignment '{}'", id));
}

template <class E>
E parse_enum(std::string_view s, std::optional<E> (*parse)(std::string_view) noexcept, const char* what) {
  auto v = parse(s);
  if (!v) fail(Errc::invalid_argument, fmt::format("unknown {} '{}'", what, s));
  return *v;
}

std::string bundle_json(const fs::path& source) {
  json out = json::array();
  for (const auto& a : load_assignment_bundle(source)) {
    json names = json::array();
    for (const auto& s : a.suite) names.push_back(s.name);
    out.push_back({{"id", a.id},
                   {"title", a.title},
                   {"tier", to_string(a.tier)},
                   {"hint_policy", {{"control", a.hint_policy.control}, {"experimental", a.hint_policy.experimental}}},
                   {"tests", std::move(names)}});
  }
  return out.dump();
}

std::string grade_json(const fs::path& bundle, const std::string& id, const std::string& code) {
  auto task = find_task(bundle, id);
  MockBackend backend;
  auto ev = evaluate_submission(code, task.suite, backend);
  json j{{"outcome", to_string(ev.outcome)}, {"score", ev.score}};
  j["feedback"] = json::parse(to_json(assemble_feedback_view(ev.outcome, ev.compile, ev.results)).dump());
  if (ev.fault) j["fault"] = {{"type", ev.fault->exception_type}, {"message", ev.fault->message}, {"during", ev.fault->during}};
  else j["fault"] = nullptr;
  return j.dump();
}

std::optional<std::string> prompt_json(const fs::path& bundle, const std::string& id, const std::string& code,
                                       const std::string& locale) {
  auto task = find_task(bundle, id);
  MockBackend backend;
  auto ev = evaluate_submission(code, task.suite, backend);
  if (ev.outcome == OutcomeClass::all_passed) return std::nullopt;
  PromptOptions o;
  o.locale = locale;
  auto p = build_prompt(task, code, ev.outcome, PromptDetail{ev.compile.diagnostics, ev.fault, ev.results}, o);
  return json{{"scenario", to_string(p.scenario)}, {"text", p.text}, {"token_estimate", p.token_estimate},
              {"locale", p.locale}}
      .dump();
}

std::string mwu_json(const std::vector<double>& a, const std::vector<double>& b, std::size_t exact_max_total) {
  auto r = mann_whitney_u(a, b, MwuOptions{exact_max_total});
  return json{{"W", r.statistic}, {"p", r.p_value}, {"n_a", r.n_a}, {"n_b", r.n_b}, {"method", to_string(r.method)}}
      .dump();
}

std::string bh_json(const std::vector<std::pair<std::string, double>>& labeled, double q) {
  std::vector<LabeledP> in;
  for (const auto& [label, p] : labeled) in.push_back({label, p});
  auto d = benjamini_hochberg(in, q);
  json rows = json::array();
  for (const auto& r : d.ranked)
    rows.push_back({{"label", r.label}, {"p", r.p}, {"rank", r.rank}, {"threshold", r.threshold}, {"rejected", r.rejected}});
  return rows.dump();
}

std::string simulate_json(const fs::path& bundle, const std::optional<fs::path>& log, int students,
                          std::uint64_t seed, int max_attempts) {
  SimulationConfig c;
  c.students = students;
  c.seed = seed;
  c.max_attempts = max_attempts;
  auto run = run_simulation(bundle, c, log);
  const auto& s = run.summary;
  return json{{"participants", s.participants}, {"submissions", s.submissions}, {"hints_shown", s.hints_shown},
              {"ratings", s.ratings},           {"clicks", s.clicks},           {"affect_responses", s.affect_responses},
              {"events", run.events.size()}}
      .dump();
}

std::map<std::string, std::string> analyze_files(const fs::path& log) {
  return build_report(replay_event_log_file(log)).files;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Grading, hint and analysis core";

  // Kept alive for the interpreter's lifetime.
  static py::handle error_type = py::exception<Error>(m, "GradehintError").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = error_type(e.what());
      err.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), err.ptr());
    }
  });

  m.def("load_bundle", &bundle_json, py::arg("source"));
  m.def("grade", &grade_json, py::arg("bundle"), py::arg("assignment_id"), py::arg("code"),
        py::call_guard<py::gil_scoped_release>());
  m.def("prompt_for", &prompt_json, py::arg("bundle"), py::arg("assignment_id"), py::arg("code"),
        py::arg("locale") = "pl");
  m.def("estimate_tokens", [](const std::string& text) { return estimate_tokens(text); }, py::arg("text"));
  m.def(
      "hint_gate",
      [](const std::string& condition, bool hints_enabled, const std::string& outcome) {
        Assignment a;
        a.hint_policy = {false, hints_enabled};
        return hint_gate(parse_enum<Condition>(condition, parse_condition, "condition"), a,
                         parse_enum<OutcomeClass>(outcome, parse_outcome_class, "outcome"));
      },
      py::arg("condition"), py::arg("hints_enabled"), py::arg("outcome"));
  m.def("mann_whitney_u", &mwu_json, py::arg("a"), py::arg("b"), py::arg("exact_max_total") = 12);
  m.def("benjamini_hochberg", &bh_json, py::arg("labeled"), py::arg("q") = 0.05);
  m.def("simulate", &simulate_json, py::arg("bundle"), py::arg("log") = py::none(), py::arg("students") = 20,
        py::arg("seed") = 1, py::arg("max_attempts") = 8, py::call_guard<py::gil_scoped_release>());
  m.def("analyze", &analyze_files, py::arg("log"), py::call_guard<py::gil_scoped_release>());
  m.def("request_parameters", [] { return CompletionParams{}.to_key_value_list(); });
}
