#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "gradehint/literal.hpp"

namespace gradehint {

enum class TestKind { class_defined, member_exists, constructor_exists, method_returns, expression_evaluates };

std::string_view to_string(TestKind k) noexcept;
std::optional<TestKind> parse_test_kind(std::string_view s) noexcept;

using Deadline = std::chrono::steady_clock::time_point;

struct Fault {
  std::string type;
  std::string message;
};

/// Result of one reflective query. Exactly one of: a value, a fault, or a
/// timeout.
struct Invocation {
  std::optional<Literal> value;
  std::optional<Fault> fault;
  bool timed_out = false;

  static Invocation of(Literal v) { return Invocation{std::move(v), std::nullopt, false}; }
  static Invocation thrown(std::string type, std::string message) {
    return Invocation{std::nullopt, Fault{std::move(type), std::move(message)}, false};
  }
  static Invocation timeout() { return Invocation{std::nullopt, std::nullopt, true}; }
};

/// Backend-owned handle over a compiled submission. Presence queries are
/// side-effect free; every invocation starts from fresh program state.
class ReflectionTarget {
 public:
  virtual ~ReflectionTarget() = default;

  virtual bool supports(TestKind kind) const = 0;

  virtual Invocation has_class(std::string_view name, Deadline deadline) const = 0;
  /// `access` empty matches any access modifier.
  virtual Invocation has_member(std::string_view cls, std::string_view member, std::string_view access,
                                Deadline deadline) const = 0;
  virtual Invocation has_constructor(std::string_view cls, std::string_view access,
                                     std::span<const std::string> param_types, Deadline deadline) const = 0;
  /// `qualified` is `Class.Method`.
  virtual Invocation invoke_method(std::string_view qualified, std::span<const Literal> args,
                                   Deadline deadline) const = 0;
  virtual Invocation evaluate_expression(std::string_view expression, Deadline deadline) const = 0;
};

}  // namespace gradehint
