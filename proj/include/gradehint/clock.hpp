#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>

namespace gradehint {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

/// Injected wall clock. Nothing in the library reads ambient time directly.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() const override;
};

/// Settable clock for simulations and tests.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(Timestamp start) : now_(start) {}

  Timestamp now() const override;
  void advance(std::chrono::milliseconds by);
  void set(Timestamp t);

 private:
  mutable std::mutex mu_;
  Timestamp now_;
};

/// `2023-03-01T10:00:00.000Z`
std::string format_rfc3339(Timestamp t);

/// Accepts `Z` or a `+hh:mm` / `-hh:mm` offset and an optional fractional
/// second part. Throws Error(invalid_argument) on malformed input.
Timestamp parse_rfc3339(std::string_view text);

}  // namespace gradehint
