#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include <json.hpp>

namespace gradehint {

/// A literal test value: null, bool, 64-bit integer, double or string.
/// Equality is structural and type-strict (5 and 5.0 differ).
struct Literal {
  using Storage = std::variant<std::monostate, bool, std::int64_t, double, std::string>;
  Storage value;

  Literal() = default;
  Literal(bool b) : value(b) {}
  Literal(int i) : value(std::int64_t{i}) {}
  Literal(std::int64_t i) : value(i) {}
  Literal(double d) : value(d) {}
  Literal(const char* s) : value(std::string(s)) {}
  Literal(std::string s) : value(std::move(s)) {}

  bool is_null() const { return std::holds_alternative<std::monostate>(value); }

  friend bool operator==(const Literal&, const Literal&) = default;
};

/// C#-flavoured rendering used in feedback details and prompts:
/// `true`, `5`, `"text"`, `null`.
std::string describe(const Literal& lit);

nlohmann::json to_json(const Literal& lit);

/// Throws Error(invalid_spec) for arrays and objects.
Literal literal_from_json(const nlohmann::json& j);

}  // namespace gradehint
