#pragma once

#include <map>
#include <string>
#include <string_view>

namespace gradehint::detail {

/// Regular files of an uncompressed POSIX (ustar) archive keyed by path with
/// any leading "./" removed. Throws std::runtime_error on a damaged header.
std::map<std::string, std::string> read_tar(std::string_view archive);

}  // namespace gradehint::detail
