#pragma once

#include <chrono>
#include <cstddef>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gradehint/assignment.hpp"
#include "gradehint/reflection.hpp"
#include "gradehint/thread_pool.hpp"

namespace gradehint {

struct Diagnostic {
  int line = 1;
  std::string code;
  std::string message;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

/// Parses compiler output lines of the form
///   `<file>(<line>,<col>): error <CODE>: <message>`
/// Warnings are ignored, a trailing ` [project]` suffix (as printed by
/// `dotnet build`) is dropped, and exact duplicates are collapsed.
std::vector<Diagnostic> parse_compiler_diagnostics(std::string_view raw_output);

enum class CompileStatus { ok, failed };

struct CompileOutcome {
  CompileStatus status = CompileStatus::failed;
  std::vector<Diagnostic> diagnostics;
  std::shared_ptr<const ReflectionTarget> target;
  /// Verbatim toolchain output, kept for the audit log.
  std::string raw_output;
};

struct RuntimeFault {
  std::string exception_type;
  std::string message;
  /// Name of the spec that faulted, or "main".
  std::string during;

  friend bool operator==(const RuntimeFault&, const RuntimeFault&) = default;
};

enum class OutcomeClass { compile_error, runtime_error, test_failure, all_passed };

std::string_view to_string(OutcomeClass o) noexcept;
std::optional<OutcomeClass> parse_outcome_class(std::string_view s) noexcept;

struct Limits {
  std::chrono::milliseconds compile_timeout{30'000};
  std::chrono::milliseconds test_timeout{5'000};
};

struct BackendCompileResult {
  bool success = false;
  std::string raw_output;
  std::shared_ptr<const ReflectionTarget> target;
};

class LanguageBackend {
 public:
  virtual ~LanguageBackend() = default;

  virtual std::string name() const = 0;
  virtual bool available() const = 0;
  /// Backends that cannot be driven from several workers at once return
  /// false; the evaluation pool then serializes calls into them.
  virtual bool thread_safe() const { return true; }
  /// Throws Error(compile_timeout) when `timeout` elapses.
  virtual BackendCompileResult compile(std::string_view code, std::chrono::milliseconds timeout) const = 0;
};

/// Throws Error(invalid_argument) for empty code, Error(backend_unavailable)
/// when the toolchain is missing, Error(compile_timeout) on timeout.
CompileOutcome compile_submission(std::string_view code, const LanguageBackend& backend, const Limits& limits = {});

struct SuiteRun {
  std::vector<TestResult> results;
  std::optional<RuntimeFault> fault;
};

/// Runs every spec in order. The first fault or timeout is recorded; the
/// faulting spec fails and the remaining specs still run.
SuiteRun run_test_suite(const ReflectionTarget& target, std::span<const TestSpec> suite, const Limits& limits = {});

/// Priority: CompileError, RuntimeError, TestFailure, AllPassed.
/// Throws Error(inconsistent_inputs) when results or a fault accompany a
/// failed compile, or when a successful compile has no results.
OutcomeClass classify_outcome(const CompileOutcome& compile, std::span<const TestResult> results,
                              const std::optional<RuntimeFault>& fault);

/// Everything the platform knows about one graded submission.
struct Evaluation {
  CompileOutcome compile;
  std::vector<TestResult> results;
  std::optional<RuntimeFault> fault;
  OutcomeClass outcome = OutcomeClass::compile_error;
  /// 0 for a compile error, otherwise compute_score(results).
  double score = 0.0;
};

Evaluation evaluate_submission(std::string_view code, std::span<const TestSpec> suite, const LanguageBackend& backend,
                               const Limits& limits = {});

/// Bounded worker pool for evaluations. Results are returned by value.
class EvaluationPool {
 public:
  EvaluationPool(std::shared_ptr<const LanguageBackend> backend, std::size_t workers, Limits limits = {});

  std::future<Evaluation> submit(std::string code, std::vector<TestSpec> suite);
  Evaluation evaluate(std::string code, std::vector<TestSpec> suite) { return submit(std::move(code), std::move(suite)).get(); }

  const LanguageBackend& backend() const { return *backend_; }
  const Limits& limits() const { return limits_; }

 private:
  std::shared_ptr<const LanguageBackend> backend_;
  Limits limits_;
  std::mutex serial_;
  ThreadPool pool_;
};

// ---------------------------------------------------------------------------
// Shipped backends

/// In-process backend over a small C#-like class language (see
/// docs/mock-language.md). Deterministic and hermetic.
class MockBackend final : public LanguageBackend {
 public:
  std::string name() const override { return "mock"; }
  bool available() const override { return true; }
  BackendCompileResult compile(std::string_view code, std::chrono::milliseconds timeout) const override;
};

/// Shells out to an installed C# toolchain. See docs/subprocess-backend.md
/// for the runner protocol used for reflective tests.
struct SubprocessConfig {
  /// Optional sandbox prefix prepended to every command, e.g. a bwrap or
  /// nsjail invocation.
  std::vector<std::string> wrapper;
  /// Compiler command. `{src}` and `{out}` are substituted.
  std::vector<std::string> compile_command;
  /// Runner command. `{out}` is substituted; the query is written to stdin.
  std::vector<std::string> runner_command;
  std::string source_name = "Program.cs";
  std::string output_name = "Program.dll";

  /// Reads `{ "wrapper": [...], "compile": [...], "runner": [...] }`.
  static SubprocessConfig from_json_file(const std::string& path);
};

class SubprocessBackend final : public LanguageBackend {
 public:
  explicit SubprocessBackend(SubprocessConfig config);

  std::string name() const override { return "subprocess"; }
  bool available() const override;
  BackendCompileResult compile(std::string_view code, std::chrono::milliseconds timeout) const override;

 private:
  SubprocessConfig config_;
};

}  // namespace gradehint
