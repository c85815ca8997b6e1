#include "tar_reader.hpp"

#include <stdexcept>

namespace gradehint::detail {

namespace {

constexpr std::size_t kBlock = 512;

std::string field(std::string_view header, std::size_t off, std::size_t len) {
  auto f = header.substr(off, len);
  auto nul = f.find('\0');
  return std::string(f.substr(0, nul));
}

std::size_t octal(std::string_view header, std::size_t off, std::size_t len) {
  std::size_t v = 0;
  for (char c : header.substr(off, len)) {
    if (c == '\0' || c == ' ') {
      if (v) break;
      continue;
    }
    if (c < '0' || c > '7') throw std::runtime_error("tar: bad octal field");
    v = v * 8 + static_cast<std::size_t>(c - '0');
  }
  return v;
}

bool all_zero(std::string_view block) {
  for (char c : block)
    if (c != '\0') return false;
  return true;
}

}  // namespace

std::map<std::string, std::string> read_tar(std::string_view archive) {
  std::map<std::string, std::string> files;
  std::size_t pos = 0;
  std::string long_name;
  while (pos + kBlock <= archive.size()) {
    auto header = archive.substr(pos, kBlock);
    if (all_zero(header)) break;

    std::size_t checksum = octal(header, 148, 8);
    std::size_t sum = 0;
    for (std::size_t i = 0; i < kBlock; ++i)
      sum += (i >= 148 && i < 156) ? ' ' : static_cast<unsigned char>(header[i]);
    if (sum != checksum) throw std::runtime_error("tar: header checksum mismatch");

    std::string name = field(header, 0, 100);
    std::string prefix = field(header, 345, 155);
    if (!prefix.empty()) name = prefix + "/" + name;
    std::size_t size = octal(header, 124, 12);
    char type = header[156];
    pos += kBlock;
    if (pos + size > archive.size()) throw std::runtime_error("tar: truncated entry '" + name + "'");
    auto data = archive.substr(pos, size);
    pos += (size + kBlock - 1) / kBlock * kBlock;

    if (type == 'L') {  // GNU long name for the next entry
      long_name = std::string(data.substr(0, data.find('\0')));
      continue;
    }
    if (!long_name.empty()) {
      name = long_name;
      long_name.clear();
    }
    if (type != '0' && type != '\0') continue;
    while (name.rfind("./", 0) == 0) name.erase(0, 2);
    files[name] = std::string(data);
  }
  return files;
}

}  // namespace gradehint::detail
