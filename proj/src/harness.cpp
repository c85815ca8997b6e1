#include "gradehint/harness.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

#include <fmt/format.h>

#include "gradehint/error.hpp"

namespace gradehint {

std::string_view to_string(OutcomeClass o) noexcept {
  switch (o) {
    case OutcomeClass::compile_error: return "CompileError";
    case OutcomeClass::runtime_error: return "RuntimeError";
    case OutcomeClass::test_failure: return "TestFailure";
    case OutcomeClass::all_passed: return "AllPassed";
  }
  return "Unknown";
}

std::optional<OutcomeClass> parse_outcome_class(std::string_view s) noexcept {
  for (auto o : {OutcomeClass::compile_error, OutcomeClass::runtime_error, OutcomeClass::test_failure,
                 OutcomeClass::all_passed}) {
    if (to_string(o) == s) return o;
  }
  return std::nullopt;
}

std::vector<Diagnostic> parse_compiler_diagnostics(std::string_view raw_output) {
  static const std::regex kLine(R"(^.*\((\d+),(\d+)\): error ([A-Za-z]+[0-9]+): (.*?)(?: \[[^\]]*\])?\s*$)");
  std::vector<Diagnostic> out;
  std::istringstream in{std::string(raw_output)};
  std::string line;
  while (std::getline(in, line)) {
    std::smatch m;
    if (!std::regex_match(line, m, kLine)) continue;
    Diagnostic d;
    d.line = std::max(1, std::stoi(m[1].str()));
    d.code = m[3].str();
    d.message = m[4].str();
    if (std::find(out.begin(), out.end(), d) == out.end()) out.push_back(std::move(d));
  }
  return out;
}

CompileOutcome compile_submission(std::string_view code, const LanguageBackend& backend, const Limits& limits) {
  if (code.empty()) fail(Errc::invalid_argument, "submitted code is empty");
  if (!backend.available()) fail(Errc::backend_unavailable, fmt::format("backend '{}' is not available", backend.name()));

  auto compiled = backend.compile(code, limits.compile_timeout);
  CompileOutcome out;
  out.raw_output = std::move(compiled.raw_output);
  if (compiled.success) {
    out.status = CompileStatus::ok;
    out.target = std::move(compiled.target);
    if (!out.target) fail(Errc::backend_unavailable, "backend reported success without a reflection target");
    return out;
  }
  out.status = CompileStatus::failed;
  out.diagnostics = parse_compiler_diagnostics(out.raw_output);
  if (out.diagnostics.empty()) {
    // Toolchain failed without a parsable error line; keep the first line.
    auto first = out.raw_output.substr(0, out.raw_output.find('\n'));
    out.diagnostics.push_back(Diagnostic{1, "BUILD", first.empty() ? "build failed" : first});
  }
  return out;
}

SuiteRun run_test_suite(const ReflectionTarget& target, std::span<const TestSpec> suite, const Limits& limits) {
  SuiteRun run;
  run.results.reserve(suite.size());
  for (const auto& spec : suite) {
    auto deadline = std::chrono::steady_clock::now() + limits.test_timeout;
    auto eval = evaluate_test_spec(spec, target, deadline);
    if (eval.timed_out) {
      eval.result.passed = false;
      if (!run.fault)
        run.fault = RuntimeFault{"TestTimeout", fmt::format("test exceeded {} ms", limits.test_timeout.count()), spec.name};
    } else if (eval.fault) {
      eval.result.passed = false;
      if (!run.fault) run.fault = RuntimeFault{eval.fault->type, eval.fault->message, spec.name};
    }
    run.results.push_back(std::move(eval.result));
  }
  return run;
}

OutcomeClass classify_outcome(const CompileOutcome& compile, std::span<const TestResult> results,
                              const std::optional<RuntimeFault>& fault) {
  if (compile.status == CompileStatus::failed) {
    if (!results.empty() || fault)
      fail(Errc::inconsistent_inputs, "test results or a fault supplied with a failed compile");
    return OutcomeClass::compile_error;
  }
  if (results.empty()) fail(Errc::inconsistent_inputs, "successful compile without test results");
  if (fault) return OutcomeClass::runtime_error;
  bool all = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
  return all ? OutcomeClass::all_passed : OutcomeClass::test_failure;
}

Evaluation evaluate_submission(std::string_view code, std::span<const TestSpec> suite, const LanguageBackend& backend,
                               const Limits& limits) {
  Evaluation ev;
  ev.compile = compile_submission(code, backend, limits);
  if (ev.compile.status == CompileStatus::ok) {
    auto run = run_test_suite(*ev.compile.target, suite, limits);
    ev.results = std::move(run.results);
    ev.fault = std::move(run.fault);
  }
  ev.outcome = classify_outcome(ev.compile, ev.results, ev.fault);
  ev.score = ev.compile.status == CompileStatus::ok ? compute_score(ev.results) : 0.0;
  return ev;
}

EvaluationPool::EvaluationPool(std::shared_ptr<const LanguageBackend> backend, std::size_t workers, Limits limits)
    : backend_(std::move(backend)), limits_(limits), pool_(workers) {
  if (!backend_) fail(Errc::invalid_argument, "evaluation pool needs a backend");
}

std::future<Evaluation> EvaluationPool::submit(std::string code, std::vector<TestSpec> suite) {
  return pool_.submit([this, code = std::move(code), suite = std::move(suite)] {
    if (backend_->thread_safe()) return evaluate_submission(code, suite, *backend_, limits_);
    std::lock_guard lock(serial_);
    return evaluate_submission(code, suite, *backend_, limits_);
  });
}

}  // namespace gradehint
