#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "gradehint/hint.hpp"

namespace gradehint {
namespace {

std::string base64_decode(std::string_view in) {
  std::string out(3 * ((in.size() + 3) / 4), '\0');
  int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()), reinterpret_cast<const unsigned char*>(in.data()),
                          static_cast<int>(in.size()));
  if (n < 0) fail(Errc::invalid_argument, "bad base64 in rank file");
  std::size_t pad = 0;
  for (auto it = in.rbegin(); it != in.rend() && *it == '='; ++it) ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

enum class Cls { letter, digit, space, newline, other };

struct Cp {
  std::size_t begin;
  std::size_t end;
  Cls cls;
  char ascii;  // 0 for non-ASCII
};

std::vector<Cp> decode(std::string_view s) {
  std::vector<Cp> out;
  for (std::size_t i = 0; i < s.size();) {
    auto b = static_cast<unsigned char>(s[i]);
    std::size_t len = b < 0x80 ? 1 : (b >> 5) == 6 ? 2 : (b >> 4) == 14 ? 3 : (b >> 3) == 30 ? 4 : 1;
    len = std::min(len, s.size() - i);
    Cls c = Cls::letter;
    char a = 0;
    if (b < 0x80) {
      a = static_cast<char>(b);
      if (std::isalpha(b)) c = Cls::letter;
      else if (std::isdigit(b)) c = Cls::digit;
      else if (a == '\n' || a == '\r') c = Cls::newline;
      else if (std::isspace(b)) c = Cls::space;
      else c = Cls::other;
    }
    out.push_back({i, i + len, c, a});
    i += len;
  }
  return out;
}

bool is_ws(Cls c) { return c == Cls::space || c == Cls::newline; }

/// cl100k pre-tokenizer:
///   's|'t|'re|'ve|'m|'ll|'d  (case-insensitive)
///   [^\r\n\p{L}\p{N}]?\p{L}+
///   \p{N}{1,3}
///   ` ?[^\s\p{L}\p{N}]+[\r\n]*`
///   \s*[\r\n]+
///   \s+(?!\S)
///   \s+
std::vector<std::string_view> pretokenize(std::string_view s) {
  auto cps = decode(s);
  std::vector<std::string_view> out;
  std::size_t n = cps.size();
  auto lower = [&](std::size_t k) { return k < n ? static_cast<char>(std::tolower(cps[k].ascii)) : '\0'; };
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    // contractions
    if (cps[i].ascii == '\'') {
      char a = lower(i + 1), b = lower(i + 2);
      if ((a == 'r' && b == 'e') || (a == 'v' && b == 'e') || (a == 'l' && b == 'l')) j = i + 3;
      else if (a == 's' || a == 't' || a == 'm' || a == 'd') j = i + 2;
    }
    // optional non-letter prefix then letters
    if (j == i) {
      std::size_t k = i;
      if (cps[k].cls != Cls::letter && cps[k].cls != Cls::digit && cps[k].cls != Cls::newline && k + 1 < n &&
          cps[k + 1].cls == Cls::letter)
        ++k;
      if (cps[k].cls == Cls::letter) {
        while (k < n && cps[k].cls == Cls::letter) ++k;
        j = k;
      }
    }
    if (j == i && cps[i].cls == Cls::digit) {
      j = i;
      while (j < n && j - i < 3 && cps[j].cls == Cls::digit) ++j;
    }
    if (j == i) {
      std::size_t k = i;
      if (cps[k].ascii == ' ' && k + 1 < n && cps[k + 1].cls == Cls::other) ++k;
      if (cps[k].cls == Cls::other) {
        while (k < n && cps[k].cls == Cls::other) ++k;
        while (k < n && cps[k].cls == Cls::newline) ++k;
        j = k;
      }
    }
    if (j == i && is_ws(cps[i].cls)) {
      std::size_t e = i;
      while (e < n && is_ws(cps[e].cls)) ++e;
      std::size_t last_nl = n;
      for (std::size_t k = i; k < e; ++k)
        if (cps[k].cls == Cls::newline) last_nl = k;
      if (last_nl != n) {
        j = last_nl + 1;
      } else if (e == n || e - i == 1) {
        j = e;
      } else {
        j = e - 1;
      }
    }
    if (j == i) j = i + 1;
    out.push_back(s.substr(cps[i].begin, cps[j - 1].end - cps[i].begin));
    i = j;
  }
  return out;
}

}  // namespace

std::shared_ptr<BpeTokenizer> BpeTokenizer::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::not_found, fmt::format("cannot open rank file {}", path.string()));
  auto tok = std::make_shared<BpeTokenizer>();
  std::string line;
  while (std::getline(in, line)) {
    auto sp = line.find(' ');
    if (sp == std::string::npos) continue;
    tok->ranks_.emplace(base64_decode(std::string_view(line).substr(0, sp)), std::stoi(line.substr(sp + 1)));
  }
  if (tok->ranks_.size() < 256) fail(Errc::invalid_argument, fmt::format("{} is not a rank file", path.string()));
  return tok;
}

void BpeTokenizer::encode_piece(std::string_view piece, std::vector<int>& out) const {
  if (auto it = ranks_.find(piece); it != ranks_.end()) {
    out.push_back(it->second);
    return;
  }
  // Part boundaries; merge the lowest-ranked adjacent pair until none is known.
  std::vector<std::size_t> cuts(piece.size() + 1);
  for (std::size_t i = 0; i <= piece.size(); ++i) cuts[i] = i;
  constexpr int kNone = std::numeric_limits<int>::max();
  while (cuts.size() > 2) {
    int best = kNone;
    std::size_t at = 0;
    for (std::size_t i = 0; i + 2 < cuts.size(); ++i) {
      auto it = ranks_.find(piece.substr(cuts[i], cuts[i + 2] - cuts[i]));
      if (it != ranks_.end() && it->second < best) {
        best = it->second;
        at = i;
      }
    }
    if (best == kNone) break;
    cuts.erase(cuts.begin() + static_cast<std::ptrdiff_t>(at) + 1);
  }
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto it = ranks_.find(piece.substr(cuts[i], cuts[i + 1] - cuts[i]));
    out.push_back(it == ranks_.end() ? -1 : it->second);
  }
}

std::vector<int> BpeTokenizer::encode(std::string_view text) const {
  std::vector<int> out;
  for (auto piece : pretokenize(text)) encode_piece(piece, out);
  return out;
}

int BpeTokenizer::count(std::string_view text) const { return static_cast<int>(encode(text).size()); }

}  // namespace gradehint
