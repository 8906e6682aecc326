#include "eos/search_engine.hpp"

#include <algorithm>

#include "eos/error.hpp"

namespace eos {

std::string_view to_string(CacheEvent event) {
  switch (event) {
    case CacheEvent::kNone: return "none";
    case CacheEvent::kMiss: return "miss";
    case CacheEvent::kHit: return "hit";
    case CacheEvent::kResume: return "resume";
  }
  return "?";
}

void TunerConfig::validate() const {
  if (dwell <= Duration::zero()) throw Error(ErrorCode::kInvalidConfig, "dwell must be positive");
  if (period < dwell) throw Error(ErrorCode::kInvalidConfig, "period must be at least dwell");
  if (repetitions == 0) throw Error(ErrorCode::kInvalidConfig, "repetitions must be positive");
  if (clock == nullptr) throw Error(ErrorCode::kInvalidConfig, "a clock is required");
}

RegistryEnvironment::RegistryEnvironment(const Registry& registry, std::string subsystem,
                                         std::function<bool()> running)
    : registry_(registry), subsystem_(std::move(subsystem)), running_(std::move(running)) {
  (void)registry_.subsystem(subsystem_);
}

ParameterSetting RegistryEnvironment::live_setting() {
  ParameterSetting out;
  for (const auto* p : registry_.params_of(subsystem_)) out[p->name] = p->accessor.read();
  return out;
}

void RegistryEnvironment::activate(const ParameterSetting& setting) {
  registry_.validate_setting(setting);
  for (const auto& [name, value] : setting) registry_.param(name).accessor.write(value);
}

Value RegistryEnvironment::measure_target() {
  const auto& s = registry_.subsystem(subsystem_);
  if (!s.target_probe) throw Error(ErrorCode::kProbeFailure, subsystem_ + " has no target probe");
  return s.target_probe();
}

SensorReading RegistryEnvironment::read_sensors() {
  const auto& s = registry_.subsystem(subsystem_);
  if (!s.sensor_probe) throw Error(ErrorCode::kProbeFailure, subsystem_ + " has no sensor probe");
  return s.sensor_probe();
}

bool RegistryEnvironment::is_bottleneck() {
  const auto& s = registry_.subsystem(subsystem_);
  if (!s.bottleneck_probe) throw Error(ErrorCode::kProbeFailure, subsystem_ + " has no bottleneck probe");
  return s.bottleneck_probe();
}

std::optional<std::string> detect_bottleneck(
    const std::vector<std::pair<std::string, Environment*>>& subsystems) {
  for (const auto& [id, env] : subsystems) {
    bool busy = false;
    try {
      busy = env->is_bottleneck();
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kProbeFailure, id + ": " + e.what());
    }
    if (busy) return id;
  }
  return std::nullopt;
}

std::vector<std::string> order_params(const std::vector<const ParamSpec*>& params) {
  std::vector<std::pair<std::size_t, std::string>> sized;
  sized.reserve(params.size());
  for (const auto* p : params) sized.emplace_back(candidate_values(*p).size(), p->name);
  std::stable_sort(sized.begin(), sized.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> out;
  out.reserve(sized.size());
  for (auto& [_, name] : sized) out.push_back(std::move(name));
  return out;
}

namespace {

class Measurer {
 public:
  Measurer(Environment& env, const TunerConfig& cfg) : env_(env), cfg_(cfg) {}

  Value operator()(const ParameterSetting& setting, const std::string& param) {
    try {
      env_.activate(setting);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kActivationFailure, param + ": " + e.what());
    }
    unsigned __int128 sum = 0;
    for (unsigned r = 0; r < cfg_.repetitions; ++r) {
      cfg_.clock->sleep_for(cfg_.dwell);
      try {
        sum += env_.measure_target();
      } catch (const std::exception& e) {
        throw Error(ErrorCode::kProbeFailure, e.what());
      }
    }
    const unsigned __int128 n = cfg_.repetitions;
    return static_cast<Value>((sum + n / 2) / n);
  }

 private:
  Environment& env_;
  const TunerConfig& cfg_;
};

}  // namespace

SearchOutcome orthogonal_search(const Registry& registry, const std::string& subsystem, Environment& env,
                                std::optional<SearchState> resume, const TunerConfig& cfg) {
  cfg.validate();
  SearchOutcome out;
  out.report.subsystem = subsystem;
  SearchState& st = out.state;
  if (resume) {
    st = std::move(*resume);
    for (const auto& name : st.ordering) (void)registry.param(name);
  } else {
    st.ordering = order_params(registry.params_of(subsystem));
    try {
      st.best_setting = env.live_setting();
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kProbeFailure, subsystem + ": " + e.what());
    }
    st.phase = SearchPhase::kProbingBaseline;
  }

  Measurer measure(env, cfg);
  auto record = [&](const std::string& param, Value value, const ParameterSetting& setting, Value score) {
    out.report.steps.push_back({param, value, setting, score, cfg.clock->now()});
  };

  auto finish = [&](bool done) {
    if (done) st.phase = SearchPhase::kDone;
    out.setting = st.best_setting;
    out.report.chosen = st.best_setting;
    out.report.complete = done;
    return std::move(out);
  };

  if (st.phase == SearchPhase::kProbingBaseline) {
    if (!env.running()) return finish(false);
    const Value score = measure(st.best_setting, std::string(kBaselineStep));
    record(std::string(kBaselineStep), 0, st.best_setting, score);
    st.best_score = score;
    st.phase = SearchPhase::kSweeping;
    st.cursor = 0;
    st.candidate_cursor = 0;
  }

  while (st.phase == SearchPhase::kSweeping && st.cursor < st.ordering.size()) {
    const ParamSpec& param = registry.param(st.ordering[st.cursor]);
    if (!is_active(param, st.best_setting)) {
      ++st.cursor;
      st.candidate_cursor = 0;
      continue;
    }
    const auto ladder = candidate_values(param);
    while (st.candidate_cursor < ladder.size()) {
      if (!env.running()) return finish(false);
      const Value v = ladder[st.candidate_cursor];
      ParameterSetting trial = st.best_setting;
      trial[param.name] = v;
      const Value score = measure(trial, param.name);
      record(param.name, v, trial, score);
      const auto current = st.best_setting.find(param.name);
      const bool smaller = current == st.best_setting.end() || v < current->second;
      if (score > st.best_score || (score == st.best_score && smaller)) {
        st.best_setting = std::move(trial);
        st.best_score = score;
      }
      ++st.candidate_cursor;
    }
    ++st.cursor;
    st.candidate_cursor = 0;
  }

  // Leave the winner active.
  if (st.phase != SearchPhase::kDone) {
    try {
      env.activate(st.best_setting);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kActivationFailure, subsystem + ": " + e.what());
    }
  }
  return finish(true);
}

Tuner::Tuner(const Registry& registry, PolicyCache& cache, TunerConfig cfg)
    : registry_(registry), cache_(cache), cfg_(cfg) {
  cfg_.validate();
}

void Tuner::attach(const std::string& subsystem, Environment& env) {
  (void)registry_.subsystem(subsystem);
  for (auto& [id, e] : envs_) {
    if (id == subsystem) {
      e = &env;
      return;
    }
  }
  envs_.emplace_back(subsystem, &env);
  // Keep probing order equal to registration order.
  std::vector<std::pair<std::string, Environment*>> ordered;
  for (const auto& s : registry_.subsystems()) {
    for (const auto& p : envs_) {
      if (p.first == s.id) ordered.push_back(p);
    }
  }
  envs_ = std::move(ordered);
}

SessionReport Tuner::run_cycle() {
  SessionReport report;
  const std::size_t cycle = cycle_++;
  report.cycle = cycle;
  try {
    auto target = detect_bottleneck(envs_);
    if (!target) return report;
    for (auto& [id, env] : envs_) {
      if (id == *target) {
        report = tune(id, *env);
        break;
      }
    }
  } catch (const std::exception& e) {
    report.error = e.what();
  }
  report.cycle = cycle;
  return report;
}

SessionReport Tuner::tune(const std::string& subsystem, Environment& env) {
  SensorReading reading;
  try {
    reading = env.read_sensors();
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kProbeFailure, subsystem + ": " + e.what());
  }
  WorkloadSignature sig{subsystem, std::move(reading.values), std::move(reading.thresholds)};
  auto hit = cache_.lookup(sig);

  if (hit && hit->complete) {
    SessionReport report;
    report.subsystem = subsystem;
    report.cache_event = CacheEvent::kHit;
    try {
      env.activate(hit->setting);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kActivationFailure, subsystem + ": " + e.what());
    }
    report.chosen = hit->setting;
    report.complete = true;
    return report;
  }

  std::optional<SearchState> resume;
  if (hit) resume = hit->resume_state;
  SearchOutcome outcome = orthogonal_search(registry_, subsystem, env, std::move(resume), cfg_);
  outcome.report.cache_event = hit ? CacheEvent::kResume : CacheEvent::kMiss;

  CacheEntry entry;
  // Stored thresholds stay those captured when the entry was first made.
  entry.signature = hit ? hit->signature : sig;
  entry.setting = outcome.setting;
  entry.complete = outcome.state.phase == SearchPhase::kDone;
  if (!entry.complete) entry.resume_state = outcome.state;
  if (hit) {
    if (!cache_.update(hit->id, entry)) cache_.insert(std::move(entry));
  } else {
    cache_.insert(std::move(entry));
  }
  return std::move(outcome.report);
}

std::vector<SessionReport> Tuner::run(std::size_t cycles) {
  std::vector<SessionReport> out;
  const Timestamp start = cfg_.clock->now();
  for (std::size_t i = 0; i < cycles; ++i) {
    cfg_.clock->sleep_until(start + cfg_.period * static_cast<long>(i));
    out.push_back(run_cycle());
  }
  return out;
}

}  // namespace eos
