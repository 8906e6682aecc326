#pragma once

#include <chrono>

#include "eos/lock_subsystem.hpp"
#include "eos/search_engine.hpp"

namespace eos::lock {

struct LiveTuneResult {
  ParameterSetting setting;
  Protocol protocol = Protocol::kTtas;
  SessionReport report;
};

// Starts a contention workload on a fresh mixed lock, lets it warm up, and
// runs one orthogonal search over the lock subsystem on the wall clock.
// The search is forced; the bottleneck probe is not consulted.
LiveTuneResult tune_live_lock(const ContentionConfig& workload, Duration dwell, unsigned repetitions = 1,
                              Duration warmup = std::chrono::milliseconds(100));

// Acquisitions per second with the lock held to one protocol.
double measure_pinned(const ContentionConfig& workload, Protocol protocol, Duration duration,
                      Duration warmup = std::chrono::milliseconds(100));

// Acquisitions per second with the lock held to `setting`.
double measure_setting(const ContentionConfig& workload, const ParameterSetting& setting, Duration duration,
                       Duration warmup = std::chrono::milliseconds(100));

}  // namespace eos::lock
