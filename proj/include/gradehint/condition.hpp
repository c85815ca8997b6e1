#pragma once

#include <optional>
#include <string_view>

namespace gradehint {

enum class Condition { control, experimental };

std::string_view to_string(Condition c) noexcept;
std::optional<Condition> parse_condition(std::string_view s) noexcept;

}  // namespace gradehint
