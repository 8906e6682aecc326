#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eos/clock.hpp"
#include "eos/param_spec.hpp"
#include "eos/policy_cache.hpp"
#include "eos/search_state.hpp"

namespace eos {

// What the tuner drives for one subsystem.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual ParameterSetting live_setting() = 0;
  virtual void activate(const ParameterSetting& setting) = 0;
  virtual Value measure_target() = 0;
  virtual SensorReading read_sensors() = 0;
  virtual bool is_bottleneck() = 0;
  // False once the workload has ended; checked before every measurement.
  virtual bool running() = 0;
};

// Environment backed by a registry subsystem's accessors and probes.
class RegistryEnvironment final : public Environment {
 public:
  RegistryEnvironment(const Registry& registry, std::string subsystem,
                      std::function<bool()> running = {});

  ParameterSetting live_setting() override;
  void activate(const ParameterSetting& setting) override;
  Value measure_target() override;
  SensorReading read_sensors() override;
  bool is_bottleneck() override;
  bool running() override { return !running_ || running_(); }

  void set_running(std::function<bool()> running) { running_ = std::move(running); }

 private:
  const Registry& registry_;
  std::string subsystem_;
  std::function<bool()> running_;
};

struct TunerConfig {
  Duration dwell = std::chrono::seconds(5);
  Duration period = std::chrono::minutes(15);
  // Probes averaged per measurement after each dwell. 1 = single reading.
  unsigned repetitions = 1;
  Clock* clock = nullptr;

  void validate() const;  // throws kInvalidConfig
};

enum class CacheEvent { kNone, kMiss, kHit, kResume };

std::string_view to_string(CacheEvent event);

inline constexpr std::string_view kBaselineStep = "baseline";

struct MeasurementStep {
  std::string param;  // parameter being swept, or kBaselineStep
  Value value = 0;
  ParameterSetting setting;  // full setting that was measured
  Value score = 0;
  Timestamp at{0};
};

struct SessionReport {
  std::size_t cycle = 0;
  std::string subsystem;  // empty when nothing was bottlenecked
  CacheEvent cache_event = CacheEvent::kNone;
  std::vector<MeasurementStep> steps;
  ParameterSetting chosen;
  bool complete = false;  // search reached Done, or a complete hit was reused
  std::optional<std::string> error;

  std::size_t measurements() const { return steps.size(); }
};

struct SearchOutcome {
  ParameterSetting setting;
  SearchState state;
  SessionReport report;
};

// First subsystem (in the given order) whose bottleneck probe fires.
// Probe exceptions surface as kProbeFailure naming the subsystem.
std::optional<std::string> detect_bottleneck(
    const std::vector<std::pair<std::string, Environment*>>& subsystems);

// Ascending by candidate count, ties in registration order.
std::vector<std::string> order_params(const std::vector<const ParamSpec*>& params);

// Modified orthogonal search over one subsystem's parameters.
//
// A fresh search measures the live setting once and then sweeps each active
// parameter's ladder in ascending order, keeping a value only when it scores
// strictly better (or equal with a smaller value). Inactive parameters are
// skipped; activity is evaluated against the best setting so far when the
// parameter is reached. With `resume` the search picks up at the stored
// cursors without re-measuring anything. When the environment stops running
// the returned state is not Done and can be resumed later.
SearchOutcome orthogonal_search(const Registry& registry, const std::string& subsystem, Environment& env,
                                std::optional<SearchState> resume, const TunerConfig& cfg);

// Periodic control loop: one bottlenecked subsystem per tick, consulting and
// updating the policy cache.
class Tuner {
 public:
  Tuner(const Registry& registry, PolicyCache& cache, TunerConfig cfg);

  // Subsystems are probed in registry order; only attached ones take part.
  void attach(const std::string& subsystem, Environment& env);

  // One tick: detect, look up, then reuse, resume or search.
  SessionReport run_cycle();

  // `cycles` ticks spaced cfg.period apart, starting now.
  std::vector<SessionReport> run(std::size_t cycles);

  const TunerConfig& config() const { return cfg_; }

 private:
  SessionReport tune(const std::string& subsystem, Environment& env);

  const Registry& registry_;
  PolicyCache& cache_;
  TunerConfig cfg_;
  std::vector<std::pair<std::string, Environment*>> envs_;
  std::size_t cycle_ = 0;
};

}  // namespace eos
