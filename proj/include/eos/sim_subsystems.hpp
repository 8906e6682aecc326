#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "eos/clock.hpp"
#include "eos/param_spec.hpp"

namespace eos::sim {

// Disk archetypes first, then lock contention levels.
enum class Archetype { kSeqScan, kRandomOltp, kMixed, kLow, kMid, kHigh };

inline constexpr Archetype kDiskArchetypes[] = {Archetype::kSeqScan, Archetype::kRandomOltp,
                                                Archetype::kMixed};
inline constexpr Archetype kLockArchetypes[] = {Archetype::kLow, Archetype::kMid, Archetype::kHigh};

std::string_view to_string(Archetype a);
std::optional<Archetype> parse_archetype(std::string_view s);
bool is_disk(Archetype a);

inline constexpr std::string_view kDiskSubsystem = "disk";
inline constexpr std::string_view kLockSubsystem = "sync";

// Subsystem id an archetype belongs to.
std::string_view subsystem_of(Archetype a);

struct SimWorkload {
  Archetype archetype = Archetype::kSeqScan;
  Value demand = 1;  // work units per second, > 0
  std::uint64_t seed = 0;  // 0 = shipped constants, otherwise a perturbed model
};

// One archetype's model. `base` is indexed by the selector parameter's value.
struct ArchetypeModel {
  std::vector<Value> base;
  ParameterSetting optima;  // every non-selector parameter
  std::vector<std::optional<Value>> sensors;  // nullopt = the workload's demand
  std::vector<Value> thresholds;

  friend bool operator==(const ArchetypeModel&, const ArchetypeModel&) = default;
};

struct SimConstants {
  std::map<std::string, ParameterSetting> defaults;  // live setting at reset, per subsystem
  std::map<Archetype, ArchetypeModel> models;
};

// Grammar, one declaration per line, '#' comments:
//   default <subsys> <name>=<u64>...
//   model <subsys> <archetype> base=<u64,..> optimum=<name>:<u64>,.. sensors=<u64|demand,..> thresholds=<u64,..>
SimConstants parse_sim_constants(std::string_view text);

std::string_view builtin_constants_text();
const SimConstants& builtin_constants();

// Parameter declarations of the simulated subsystems, in spec-file grammar.
std::string_view disk_spec_text();
std::string_view lock_spec_text();

// The selector parameter indexes the base table.
std::string_view selector_of(std::string_view subsystem);

// Closed-form score model for one workload.
//
// score = base[selector] * prod over active non-selector params of U, where
// U(x; x*) = 1 / (1 + |x - x*|) for linear parameters and
// 1 / (1 + |log2(max(x,1)) - log2(max(x*,1))|) for exponential ones, rounded
// half-up.
class SimModel {
 public:
  SimModel(Registry params, std::string subsystem, ParameterSetting defaults, ArchetypeModel model);

  // For seed 0 the shipped model; otherwise base values and (disk) optima are
  // redrawn from `seed`. Redrawn models keep the archetype's best selector
  // value and a margin large enough that the guarded parameter's default
  // value cannot hide it.
  static SimModel for_workload(const SimWorkload& w, const SimConstants& constants = builtin_constants());

  Value score(const ParameterSetting& setting) const;
  SensorReading sensors(Value demand) const;

  const Registry& params() const { return params_; }
  const std::string& subsystem() const { return subsystem_; }
  const std::string& selector() const { return selector_; }
  const ParameterSetting& defaults() const { return defaults_; }
  const ArchetypeModel& model() const { return model_; }

  // Throws kOutOfRangeSetting for unknown, missing or out-of-range values.
  void check_setting(const ParameterSetting& setting) const;

 private:
  Registry params_;
  std::string subsystem_;
  std::string selector_;
  ParameterSetting defaults_;
  ArchetypeModel model_;
};

// 90% of the archetype's best shipped score: enough to keep the subsystem a
// bottleneck at its default setting.
Value default_demand(Archetype a, const SimConstants& constants = builtin_constants());

// min(1, demand / score); 1 when score is 0.
double busy_fraction(Value demand, Value score);

struct StepResult {
  Value score = 0;
  SensorReading sensors;
  double busy = 0.0;
};

// A simulated subsystem plugged into a registry like a real one: its
// parameters are storage cells written directly by the framework, and its
// probes evaluate the model at the live setting.
//
// Registries keep pointers into this object; it must outlive them.
class SimSubsystem {
 public:
  SimSubsystem(std::string subsystem, const SimConstants& constants = builtin_constants());
  SimSubsystem(const SimSubsystem&) = delete;
  SimSubsystem& operator=(const SimSubsystem&) = delete;

  // Switches the running workload and resets the live setting to the
  // defaults. nullopt leaves the subsystem idle (never a bottleneck).
  void set_workload(std::optional<SimWorkload> w);
  const std::optional<SimWorkload>& workload() const { return workload_; }

  // Registers the subsystem and its parameters, bound to this object.
  void register_into(Registry& registry, unsigned busy_threshold = kDefaultBusyThreshold) const;
  // Binds already-declared entries (e.g. loaded from a spec file).
  void bind(Registry& registry) const;

  // Pure evaluation; advances `clock` by `dwell` when given.
  StepResult step(const ParameterSetting& setting, Duration dwell, Clock* clock = nullptr) const;

  ParameterSetting live_setting() const;
  void reset_setting();
  Value live_score() const;
  double live_busy() const;

  // Multiplicative uniform noise of +-percent on the target probe.
  void set_noise(unsigned percent, std::uint64_t seed);

  const std::string& id() const { return subsystem_; }
  const SimModel& model() const;

 private:
  Value probe_target() const;
  void bind_cells(Registry& registry) const;

  std::string subsystem_;
  SimConstants constants_;
  Registry params_;
  std::map<std::string, std::unique_ptr<std::atomic<Value>>> cells_;
  std::optional<SimWorkload> workload_;
  std::optional<SimModel> model_;
  unsigned noise_percent_ = 0;
  mutable std::mt19937_64 noise_rng_;
};

std::unique_ptr<SimSubsystem> make_disk_sim(const SimWorkload& w, const SimConstants& constants = builtin_constants());
std::unique_ptr<SimSubsystem> make_lock_sim(const SimWorkload& w, const SimConstants& constants = builtin_constants());

}  // namespace eos::sim
