#include "eos/sim_subsystems.hpp"

#include <algorithm>
#include <cmath>

#include "eos/error.hpp"

namespace eos::sim {

std::string_view to_string(Archetype a) {
  switch (a) {
    case Archetype::kSeqScan: return "seqscan";
    case Archetype::kRandomOltp: return "oltp";
    case Archetype::kMixed: return "mixed";
    case Archetype::kLow: return "low";
    case Archetype::kMid: return "mid";
    case Archetype::kHigh: return "high";
  }
  return "?";
}

std::optional<Archetype> parse_archetype(std::string_view s) {
  for (auto a : {Archetype::kSeqScan, Archetype::kRandomOltp, Archetype::kMixed, Archetype::kLow,
                 Archetype::kMid, Archetype::kHigh}) {
    if (s == to_string(a)) return a;
  }
  return std::nullopt;
}

bool is_disk(Archetype a) {
  return a == Archetype::kSeqScan || a == Archetype::kRandomOltp || a == Archetype::kMixed;
}

std::string_view subsystem_of(Archetype a) { return is_disk(a) ? kDiskSubsystem : kLockSubsystem; }

std::string_view selector_of(std::string_view subsystem) {
  if (subsystem == kDiskSubsystem) return "policy";
  if (subsystem == kLockSubsystem) return "method_tuner";
  throw Error(ErrorCode::kUnknownSubsystem, "no simulator for " + std::string(subsystem));
}

namespace {

std::string_view spec_text_for(std::string_view subsystem) {
  if (subsystem == kDiskSubsystem) return disk_spec_text();
  if (subsystem == kLockSubsystem) return lock_spec_text();
  throw Error(ErrorCode::kUnknownSubsystem, "no simulator for " + std::string(subsystem));
}

long double utility(const ParamSpec& p, Value x, Value ideal) {
  if (p.step == StepMode::kLinear) {
    const Value d = x > ideal ? x - ideal : ideal - x;
    return 1.0L / (1.0L + static_cast<long double>(d));
  }
  const long double lx = std::log2(static_cast<long double>(std::max<Value>(x, 1)));
  const long double li = std::log2(static_cast<long double>(std::max<Value>(ideal, 1)));
  return 1.0L / (1.0L + std::fabs(lx - li));
}

std::size_t archetype_index(Archetype a) { return static_cast<std::size_t>(a); }

ArchetypeModel perturb(const ArchetypeModel& canonical, Archetype a, std::uint64_t seed, const Registry& params,
                       const std::string& subsystem, const ParameterSetting& defaults) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(archetype_index(a))};
  std::mt19937_64 rng(seq);
  ArchetypeModel m = canonical;
  const std::string selector(selector_of(subsystem));

  // The lock simulator pins its back-off optimum; only disk optima move.
  if (is_disk(a)) {
    for (const auto* p : params.params_of(subsystem)) {
      if (p->name == selector) continue;
      const auto ladder = candidate_values(*p);
      std::uniform_int_distribution<std::size_t> pick(0, ladder.size() - 1);
      m.optima[p->name] = ladder[pick(rng)];
    }
  }

  const auto best = static_cast<Value>(
      std::max_element(canonical.base.begin(), canonical.base.end()) - canonical.base.begin());
  // While the selector is swept every other parameter sits at its default, so
  // a parameter unlocked only by the best selector value costs it U(default).
  long double margin = 0.9L;
  for (const auto* p : params.params_of(subsystem)) {
    if (p->guard && p->guard->parent == selector && p->guard->required_value == best) {
      margin = std::min(margin, 0.9L * utility(*p, defaults.at(p->name), m.optima.at(p->name)));
    }
  }
  std::uniform_int_distribution<Value> top(200000, 1000000);
  const Value top_score = top(rng);
  const auto ceiling = static_cast<Value>(static_cast<long double>(top_score) * margin);
  std::uniform_int_distribution<Value> rest(ceiling / 4, ceiling);
  for (std::size_t i = 0; i < m.base.size(); ++i) m.base[i] = (i == best) ? top_score : rest(rng);
  return m;
}

}  // namespace

SimModel::SimModel(Registry params, std::string subsystem, ParameterSetting defaults, ArchetypeModel model)
    : params_(std::move(params)),
      subsystem_(std::move(subsystem)),
      selector_(selector_of(subsystem_)),
      defaults_(std::move(defaults)),
      model_(std::move(model)) {
  const auto& sel = params_.param(selector_);
  if (model_.base.size() != sel.max + 1) {
    throw Error(ErrorCode::kInvalidConfig, "base table needs one score per " + selector_ + " value");
  }
  for (const auto* p : params_.params_of(subsystem_)) {
    if (!defaults_.contains(p->name)) throw Error(ErrorCode::kInvalidConfig, "no default for " + p->name);
    if (p->name != selector_ && !model_.optima.contains(p->name)) {
      throw Error(ErrorCode::kInvalidConfig, "no optimum for " + p->name);
    }
  }
  check_setting(defaults_);
}

SimModel SimModel::for_workload(const SimWorkload& w, const SimConstants& constants) {
  if (w.demand == 0) throw Error(ErrorCode::kInvalidConfig, "workload demand must be positive");
  const std::string subsystem(subsystem_of(w.archetype));
  Registry params = load_spec_file(spec_text_for(subsystem));
  auto m = constants.models.find(w.archetype);
  auto d = constants.defaults.find(subsystem);
  if (m == constants.models.end() || d == constants.defaults.end()) {
    throw Error(ErrorCode::kInvalidConfig, "no constants for " + std::string(to_string(w.archetype)));
  }
  ArchetypeModel model = w.seed == 0 ? m->second : perturb(m->second, w.archetype, w.seed, params, subsystem, d->second);
  return SimModel(std::move(params), subsystem, d->second, std::move(model));
}

void SimModel::check_setting(const ParameterSetting& setting) const {
  for (const auto* p : params_.params_of(subsystem_)) {
    auto it = setting.find(p->name);
    if (it == setting.end()) throw Error(ErrorCode::kOutOfRangeSetting, "setting lacks " + p->name);
  }
  if (setting.size() != params_.params_of(subsystem_).size()) {
    throw Error(ErrorCode::kOutOfRangeSetting, "setting has parameters outside " + subsystem_);
  }
  try {
    params_.validate_setting(setting);
  } catch (const Error& e) {
    throw Error(ErrorCode::kOutOfRangeSetting, e.detail());
  }
}

Value SimModel::score(const ParameterSetting& setting) const {
  check_setting(setting);
  long double s = static_cast<long double>(model_.base.at(setting.at(selector_)));
  for (const auto* p : params_.params_of(subsystem_)) {
    if (p->name == selector_ || !is_active(*p, setting)) continue;
    s *= utility(*p, setting.at(p->name), model_.optima.at(p->name));
  }
  return static_cast<Value>(std::floor(s + 0.5L));
}

SensorReading SimModel::sensors(Value demand) const {
  SensorReading r;
  for (const auto& f : model_.sensors) r.values.push_back(f ? *f : demand);
  r.thresholds = model_.thresholds;
  return r;
}

Value default_demand(Archetype a, const SimConstants& constants) {
  const auto& base = constants.models.at(a).base;
  return *std::max_element(base.begin(), base.end()) * 9 / 10;
}

double busy_fraction(Value demand, Value score) {
  if (score == 0) return 1.0;
  return std::min(1.0, static_cast<double>(demand) / static_cast<double>(score));
}

SimSubsystem::SimSubsystem(std::string subsystem, const SimConstants& constants)
    : subsystem_(std::move(subsystem)), constants_(constants), params_(load_spec_file(spec_text_for(subsystem_))) {
  for (const auto* p : params_.params_of(subsystem_)) {
    cells_.emplace(p->name, std::make_unique<std::atomic<Value>>(0));
  }
  reset_setting();
}

void SimSubsystem::set_workload(std::optional<SimWorkload> w) {
  if (w) {
    if (subsystem_of(w->archetype) != subsystem_) {
      throw Error(ErrorCode::kInvalidConfig,
                  std::string(to_string(w->archetype)) + " is not a " + subsystem_ + " workload");
    }
    model_ = SimModel::for_workload(*w, constants_);
  } else {
    model_.reset();
  }
  workload_ = w;
  reset_setting();
}

const SimModel& SimSubsystem::model() const {
  if (!model_) throw Error(ErrorCode::kProbeFailure, subsystem_ + " has no running workload");
  return *model_;
}

void SimSubsystem::reset_setting() {
  const auto& defaults = constants_.defaults.at(subsystem_);
  for (auto& [name, cell] : cells_) cell->store(defaults.at(name), std::memory_order_release);
}

ParameterSetting SimSubsystem::live_setting() const {
  ParameterSetting out;
  for (const auto& [name, cell] : cells_) out[name] = cell->load(std::memory_order_acquire);
  return out;
}

Value SimSubsystem::live_score() const { return model().score(live_setting()); }

double SimSubsystem::live_busy() const {
  const Value score = live_score();  // throws when idle
  return busy_fraction(workload_->demand, score);
}

void SimSubsystem::set_noise(unsigned percent, std::uint64_t seed) {
  noise_percent_ = percent;
  noise_rng_.seed(seed);
}

Value SimSubsystem::probe_target() const {
  const Value s = live_score();
  if (noise_percent_ == 0) return s;
  std::uniform_real_distribution<double> jitter(-static_cast<double>(noise_percent_) / 100.0,
                                                static_cast<double>(noise_percent_) / 100.0);
  return static_cast<Value>(std::llround(static_cast<double>(s) * (1.0 + jitter(noise_rng_))));
}

StepResult SimSubsystem::step(const ParameterSetting& setting, Duration dwell, Clock* clock) const {
  const auto& m = model();  // throws when idle
  StepResult r;
  r.score = m.score(setting);
  r.sensors = m.sensors(workload_->demand);
  r.busy = busy_fraction(workload_->demand, r.score);
  if (clock) clock->sleep_for(dwell);
  return r;
}

void SimSubsystem::bind_cells(Registry& registry) const {
  for (const auto* p : registry.params_of(subsystem_)) {
    auto it = cells_.find(p->name);
    if (it == cells_.end()) throw Error(ErrorCode::kUnknownParam, subsystem_ + " simulator has no " + p->name);
    const auto& mine = params_.param(p->name);
    if (p->min < mine.min || p->max > mine.max) {
      throw Error(ErrorCode::kInvalidRange, p->name + " range exceeds what the simulator supports");
    }
    registry.bind_param(p->name, ParamAccessor(it->second.get()));
  }
  const unsigned threshold = registry.subsystem(subsystem_).busy_threshold;
  registry.bind_probes(
      subsystem_, [this] { return model().sensors(workload_->demand); }, [this] { return probe_target(); },
      [this, threshold] {
        if (!workload_) return false;
        // busy >= threshold%, kept in integers: demand * 100 >= threshold * score.
        const unsigned __int128 score = live_score();
        return static_cast<unsigned __int128>(workload_->demand) * 100 >= score * threshold;
      });
}

void SimSubsystem::register_into(Registry& registry, unsigned busy_threshold) const {
  SubsystemSpec spec;
  spec.id = subsystem_;
  spec.busy_threshold = busy_threshold;
  registry.register_subsystem(std::move(spec));
  for (const auto* p : params_.params_of(subsystem_)) {
    ParamSpec copy = *p;
    registry.register_param(std::move(copy));
  }
  bind_cells(registry);
}

void SimSubsystem::bind(Registry& registry) const { bind_cells(registry); }

std::unique_ptr<SimSubsystem> make_disk_sim(const SimWorkload& w, const SimConstants& constants) {
  if (!is_disk(w.archetype)) throw Error(ErrorCode::kInvalidConfig, "not a disk workload");
  auto s = std::make_unique<SimSubsystem>(std::string(kDiskSubsystem), constants);
  s->set_workload(w);
  return s;
}

std::unique_ptr<SimSubsystem> make_lock_sim(const SimWorkload& w, const SimConstants& constants) {
  if (is_disk(w.archetype)) throw Error(ErrorCode::kInvalidConfig, "not a lock contention workload");
  auto s = std::make_unique<SimSubsystem>(std::string(kLockSubsystem), constants);
  s->set_workload(w);
  return s;
}

}  // namespace eos::sim
