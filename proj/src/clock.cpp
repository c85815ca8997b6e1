#include "gradehint/clock.hpp"

#include <cctype>

#include <fmt/format.h>

#include "gradehint/error.hpp"

namespace gradehint {

using namespace std::chrono;

Timestamp SystemClock::now() const { return time_point_cast<milliseconds>(system_clock::now()); }

Timestamp ManualClock::now() const {
  std::lock_guard lock(mu_);
  return now_;
}

void ManualClock::advance(milliseconds by) {
  std::lock_guard lock(mu_);
  now_ += by;
}

void ManualClock::set(Timestamp t) {
  std::lock_guard lock(mu_);
  now_ = t;
}

std::string format_rfc3339(Timestamp t) {
  auto day = floor<days>(t);
  year_month_day ymd{day};
  hh_mm_ss hms{t - day};
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     hms.hours().count(), hms.minutes().count(), hms.seconds().count(),
                     hms.subseconds().count());
}

namespace {

int digits(std::string_view s, std::size_t pos, std::size_t n) {
  if (pos + n > s.size()) fail(Errc::invalid_argument, "truncated timestamp");
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) fail(Errc::invalid_argument, "bad timestamp digit");
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

void expect(std::string_view s, std::size_t pos, char c) {
  if (pos >= s.size() || (s[pos] != c && !(c == 'T' && s[pos] == 't')))
    fail(Errc::invalid_argument, fmt::format("timestamp: expected '{}' at {}", c, pos));
}

}  // namespace

Timestamp parse_rfc3339(std::string_view s) {
  int y = digits(s, 0, 4);
  expect(s, 4, '-');
  int mo = digits(s, 5, 2);
  expect(s, 7, '-');
  int d = digits(s, 8, 2);
  expect(s, 10, 'T');
  int h = digits(s, 11, 2);
  expect(s, 13, ':');
  int mi = digits(s, 14, 2);
  expect(s, 16, ':');
  int se = digits(s, 17, 2);
  std::size_t pos = 19;
  int ms = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    int scale = 100;
    std::size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      ms += (s[pos] - '0') * scale;
      scale /= 10;
      ++pos;
    }
    if (pos == start) fail(Errc::invalid_argument, "empty fractional seconds");
  }
  int offset_min = 0;
  if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
    ++pos;
  } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    int sign = s[pos] == '-' ? -1 : 1;
    int oh = digits(s, pos + 1, 2);
    expect(s, pos + 3, ':');
    int om = digits(s, pos + 4, 2);
    offset_min = sign * (oh * 60 + om);
    pos += 6;
  } else {
    fail(Errc::invalid_argument, "timestamp missing zone designator");
  }
  if (pos != s.size()) fail(Errc::invalid_argument, "trailing characters after timestamp");

  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 60) fail(Errc::invalid_argument, "timestamp field out of range");
  Timestamp t = sys_days{ymd} + hours{h} + minutes{mi} + seconds{se} + milliseconds{ms};
  return t - minutes{offset_min};
}

}  // namespace gradehint
