#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gradehint/condition.hpp"
#include "gradehint/literal.hpp"
#include "gradehint/reflection.hpp"

namespace gradehint {

/// One declarative check. Argument layout per kind:
///   class_defined         [class]                              expected: bool
///   member_exists         [class, member, access]              expected: bool
///   constructor_exists    [class, access, param_type...]       expected: bool
///   method_returns        [Class.Method, arg...]               expected: any literal
///   expression_evaluates  [expression]                         expected: any literal
struct TestSpec {
  std::string name;
  TestKind kind = TestKind::class_defined;
  std::vector<Literal> arguments;
  Literal expected;

  friend bool operator==(const TestSpec&, const TestSpec&) = default;
};

enum class DifficultyTier { standard, capstone };

std::string_view to_string(DifficultyTier t) noexcept;

struct HintPolicy {
  bool control = false;
  bool experimental = false;

  bool enabled_for(Condition c) const { return c == Condition::control ? control : experimental; }

  friend bool operator==(const HintPolicy&, const HintPolicy&) = default;
};

struct Assignment {
  std::string id;
  std::string title;
  std::string body;
  std::vector<TestSpec> suite;
  DifficultyTier tier = DifficultyTier::standard;
  HintPolicy hint_policy;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct TestResult {
  std::string spec_name;
  bool passed = false;
  std::optional<Literal> observed;
  std::string input_desc;
  std::string expected_desc;

  friend bool operator==(const TestResult&, const TestResult&) = default;
};

/// Checks kind/arity/argument types and the expected-value type. Throws
/// Error(invalid_spec) naming `context` and the spec.
void validate_spec(const TestSpec& spec, std::string_view context);

/// Suite non-empty, unique names, every spec valid, capstone tasks have
/// hints disabled for every condition. Does not check the body budget.
void validate_assignment(const Assignment& a);

std::string input_description(const TestSpec& spec);

/// Outcome of running one spec including a fault or timeout, which the
/// harness turns into a RuntimeFault.
struct SpecEvaluation {
  TestResult result;
  std::optional<Fault> fault;
  bool timed_out = false;
};

SpecEvaluation evaluate_test_spec(const TestSpec& spec, const ReflectionTarget& target, Deadline deadline);

/// Convenience overload without a deadline. Faults surface as a failed
/// result with no observed value.
TestResult evaluate_test_spec(const TestSpec& spec, const ReflectionTarget& target);

/// 100 * passed / total, rounded half-up to one decimal.
double compute_score(std::span<const TestResult> results);

struct BundleOptions {
  /// Locale word used when checking the body against the prompt budget.
  std::string locale_word = "Polish";
  int max_tokens = 500;
  int token_budget = 4000;
};

/// Loads a bundle from a directory or an uncompressed tar archive. Result is
/// sorted by id.
std::vector<Assignment> load_assignment_bundle(const std::filesystem::path& source,
                                               const BundleOptions& options = {});

/// Writes the canonical on-disk form; `load_assignment_bundle` reads it back
/// to structurally identical assignments.
void write_assignment_bundle(const std::filesystem::path& dir, std::span<const Assignment> assignments);

}  // namespace gradehint
