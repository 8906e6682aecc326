#pragma once

#include <chrono>

namespace eos {

using Duration = std::chrono::nanoseconds;
using Timestamp = std::chrono::nanoseconds;  // since the clock's epoch

// Time source used by the tuner for dwell and period waits.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
  virtual void sleep_for(Duration d) = 0;

  void sleep_until(Timestamp t) {
    auto n = now();
    if (t > n) sleep_for(t - n);
  }
};

// Time only moves when someone sleeps. Used for simulated subsystems and
// trace replay so that minutes of tuning run in microseconds.
class VirtualClock final : public Clock {
 public:
  explicit VirtualClock(Timestamp start = Timestamp{0}) : now_(start) {}
  Timestamp now() const override { return now_; }
  void sleep_for(Duration d) override { now_ += d; }

 private:
  Timestamp now_;
};

class WallClock final : public Clock {
 public:
  WallClock() : epoch_(std::chrono::steady_clock::now()) {}
  Timestamp now() const override;
  void sleep_for(Duration d) override;

 private:
  std::chrono::steady_clock::time_point epoch_;
};

}  // namespace eos
