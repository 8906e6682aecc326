#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eos/clock.hpp"
#include "eos/param_spec.hpp"
#include "eos/policy_cache.hpp"
#include "eos/search_engine.hpp"
#include "eos/sim_subsystems.hpp"

namespace eos::trace {

struct TraceEpisode {
  Timestamp start{0};
  Duration duration{0};
  sim::SimWorkload workload;
};

// CSV rows `start_sec,duration_sec,archetype_or_contention,demand,seed`.
// '#' comments and a leading header row are allowed. Episodes come back
// sorted by start; overlapping ones raise kOverlapError.
std::vector<TraceEpisode> load_trace(std::string_view text);
std::vector<TraceEpisode> load_trace_path(const std::string& path);

std::string trace_to_csv(const std::vector<TraceEpisode>& episodes);

// Both simulated subsystems wired into one registry.
class SimTestbed {
 public:
  // Without `spec_text` the simulators declare themselves; with it, the
  // declarations come from the text and the simulators bind to them.
  explicit SimTestbed(std::optional<std::string_view> spec_text = std::nullopt,
                      const sim::SimConstants& constants = sim::builtin_constants());

  Registry& registry() { return registry_; }
  sim::SimSubsystem& sim_for(sim::Archetype a);
  sim::SimSubsystem& disk() { return *disk_; }
  sim::SimSubsystem& lock() { return *lock_; }

  // Environments for the subsystems the registry declares.
  std::vector<std::pair<std::string, RegistryEnvironment*>> environments();
  RegistryEnvironment* environment(std::string_view subsystem);

 private:
  std::unique_ptr<sim::SimSubsystem> disk_;
  std::unique_ptr<sim::SimSubsystem> lock_;
  Registry registry_;
  std::vector<std::pair<std::string, std::unique_ptr<RegistryEnvironment>>> envs_;
};

// Drives the tuning loop episode by episode on virtual time. Each episode
// starts with its subsystem at the default setting; ticks fall at the
// episode start and every period after it while the episode lasts. A
// measurement is only taken if its dwell ends inside the episode.
std::vector<SessionReport> replay(const std::vector<TraceEpisode>& episodes, SimTestbed& testbed,
                                  PolicyCache& cache, TunerConfig cfg);

}  // namespace eos::trace
