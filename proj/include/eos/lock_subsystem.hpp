#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "eos/mixed_lock.hpp"
#include "eos/param_spec.hpp"

namespace eos::lock {

struct ContentionConfig {
  unsigned threads = 2;
  std::uint64_t critical_units = 50;  // spin units inside the critical section
  std::uint64_t idle_units = 200;     // spin units between releases and the next acquire
};

struct ContentionTotals {
  std::uint64_t acquisitions = 0;
  std::uint64_t wait_ns = 0;  // summed over threads
  std::chrono::nanoseconds at{0};
};

// k threads looping acquire / critical section / release / idle on one
// MixedLock. The critical section increments a plain counter, which must end
// equal to the number of acquisitions.
class ContentionWorkload {
 public:
  ContentionWorkload(MixedLock& lock, ContentionConfig cfg);
  ~ContentionWorkload();
  ContentionWorkload(const ContentionWorkload&) = delete;
  ContentionWorkload& operator=(const ContentionWorkload&) = delete;

  void start();
  void stop();
  bool running() const { return running_.load(std::memory_order_acquire); }

  ContentionTotals totals() const;
  // Plain counter guarded by the lock; only meaningful after stop().
  std::uint64_t protected_counter() const { return counter_; }
  const ContentionConfig& config() const { return cfg_; }

 private:
  struct alignas(kCacheLine) PerThread {
    std::atomic<std::uint64_t> acquisitions{0};
    std::atomic<std::uint64_t> wait_ns{0};
  };

  void worker(PerThread& mine);

  MixedLock& lock_;
  ContentionConfig cfg_;
  std::atomic<bool> running_{false};
  std::atomic<bool> stop_{false};
  std::unique_ptr<PerThread[]> per_thread_;
  std::vector<std::thread> threads_;
  std::chrono::steady_clock::time_point epoch_;
  alignas(kCacheLine) std::uint64_t counter_ = 0;
};

// Exposes a running contention workload as the "sync" subsystem:
//   method_tuner 0..2 linear, val_tuner 0..16 exponential guarded by
//   method_tuner=1; target = acquisitions/sec, sensor = mean acquisition
//   latency in ns, busy = fraction of thread time spent waiting.
//
// Each probe reports over the window since its own previous call.
class LockSubsystem {
 public:
  LockSubsystem(MixedLock& lock, ContentionWorkload& workload);

  void register_into(Registry& registry, unsigned busy_threshold = kDefaultBusyThreshold);

  Value probe_target();
  SensorReading probe_sensors();
  double probe_busy();

  static constexpr Value kLatencyThreshold = 20;  // percent

 private:
  struct Window {
    ContentionTotals last;
  };
  ContentionTotals advance(Window& w);

  MixedLock& lock_;
  ContentionWorkload& workload_;
  std::mutex mu_;
  Window target_window_;
  Window sensor_window_;
  Window busy_window_;
};

}  // namespace eos::lock
