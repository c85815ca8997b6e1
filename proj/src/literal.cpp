#include "gradehint/literal.hpp"

#include <fmt/format.h>

#include "gradehint/error.hpp"

namespace gradehint {

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

}  // namespace

std::string describe(const Literal& lit) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "null";
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return fmt::format("{}", v);
        } else {
          return quote(v);
        }
      },
      lit.value);
}

nlohmann::json to_json(const Literal& lit) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else {
          return v;
        }
      },
      lit.value);
}

Literal literal_from_json(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::null: return Literal{};
    case nlohmann::json::value_t::boolean: return Literal{j.get<bool>()};
    case nlohmann::json::value_t::number_integer: return Literal{j.get<std::int64_t>()};
    case nlohmann::json::value_t::number_unsigned: {
      auto u = j.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(INT64_MAX)) fail(Errc::invalid_spec, "integer literal out of range");
      return Literal{static_cast<std::int64_t>(u)};
    }
    case nlohmann::json::value_t::number_float: return Literal{j.get<double>()};
    case nlohmann::json::value_t::string: return Literal{j.get<std::string>()};
    default: fail(Errc::invalid_spec, "literal must be null, boolean, number or string");
  }
}

}  // namespace gradehint
