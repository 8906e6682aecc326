#include "eos/trace.hpp"

#include <algorithm>
#include <sstream>

#include "eos/error.hpp"
#include "text_util.hpp"

namespace eos::trace {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::kParseError, msg, line);
}

}  // namespace

std::vector<TraceEpisode> load_trace(std::string_view text) {
  std::vector<TraceEpisode> out;
  bool first_row = true;
  text::for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
    auto line = text::strip_comment(raw);
    if (line.empty()) return;
    auto f = text::split(line, ',');
    for (auto& x : f) x = text::trim(x);
    if (first_row && !f.empty() && f[0] == "start_sec") {
      first_row = false;
      return;
    }
    first_row = false;
    if (f.size() != 5) fail(line_no, "expected start_sec,duration_sec,archetype,demand,seed");
    auto start = text::parse_u64(f[0]);
    auto duration = text::parse_u64(f[1]);
    auto archetype = sim::parse_archetype(f[2]);
    auto demand = text::parse_u64(f[3]);
    auto seed = text::parse_u64(f[4]);
    if (!start || !duration || !demand || !seed) fail(line_no, "expected unsigned integers");
    if (!archetype) fail(line_no, "unknown archetype '" + std::string(f[2]) + "'");
    if (*demand == 0) fail(line_no, "demand must be positive");
    if (*duration == 0) fail(line_no, "duration must be positive");
    TraceEpisode e;
    e.start = std::chrono::seconds(*start);
    e.duration = std::chrono::seconds(*duration);
    e.workload = sim::SimWorkload{*archetype, *demand, *seed};
    out.push_back(e);
  });
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].start < out[i - 1].start + out[i - 1].duration) {
      throw Error(ErrorCode::kOverlapError,
                  "episode at " + std::to_string(std::chrono::duration_cast<std::chrono::seconds>(out[i].start).count()) +
                      "s overlaps the previous one");
    }
  }
  return out;
}

std::vector<TraceEpisode> load_trace_path(const std::string& path) {
  std::string body;
  try {
    body = text::read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kParseError, std::string("cannot read trace: ") + e.what());
  }
  return load_trace(body);
}

std::string trace_to_csv(const std::vector<TraceEpisode>& episodes) {
  std::ostringstream out;
  out << "start_sec,duration_sec,archetype_or_contention,demand,seed\n";
  for (const auto& e : episodes) {
    out << std::chrono::duration_cast<std::chrono::seconds>(e.start).count() << ','
        << std::chrono::duration_cast<std::chrono::seconds>(e.duration).count() << ','
        << sim::to_string(e.workload.archetype) << ',' << e.workload.demand << ',' << e.workload.seed << '\n';
  }
  return out.str();
}

SimTestbed::SimTestbed(std::optional<std::string_view> spec_text, const sim::SimConstants& constants)
    : disk_(std::make_unique<sim::SimSubsystem>(std::string(sim::kDiskSubsystem), constants)),
      lock_(std::make_unique<sim::SimSubsystem>(std::string(sim::kLockSubsystem), constants)) {
  if (spec_text) {
    registry_ = load_spec_file(*spec_text);
    bool any = false;
    for (auto* s : {disk_.get(), lock_.get()}) {
      if (registry_.has_subsystem(s->id())) {
        s->bind(registry_);
        any = true;
      }
    }
    for (const auto& s : registry_.subsystems()) {
      if (s.id != sim::kDiskSubsystem && s.id != sim::kLockSubsystem) {
        throw Error(ErrorCode::kUnknownSubsystem, "no simulator for subsystem " + s.id);
      }
    }
    if (!any) throw Error(ErrorCode::kUnknownSubsystem, "spec declares no simulated subsystem");
  } else {
    disk_->register_into(registry_);
    lock_->register_into(registry_);
  }
  for (const auto& s : registry_.subsystems()) {
    envs_.emplace_back(s.id, std::make_unique<RegistryEnvironment>(registry_, s.id));
  }
}

sim::SimSubsystem& SimTestbed::sim_for(sim::Archetype a) { return sim::is_disk(a) ? *disk_ : *lock_; }

std::vector<std::pair<std::string, RegistryEnvironment*>> SimTestbed::environments() {
  std::vector<std::pair<std::string, RegistryEnvironment*>> out;
  for (auto& [id, env] : envs_) out.emplace_back(id, env.get());
  return out;
}

RegistryEnvironment* SimTestbed::environment(std::string_view subsystem) {
  for (auto& [id, env] : envs_) {
    if (id == subsystem) return env.get();
  }
  return nullptr;
}

std::vector<SessionReport> replay(const std::vector<TraceEpisode>& episodes, SimTestbed& testbed,
                                  PolicyCache& cache, TunerConfig cfg) {
  cfg.validate();
  Clock& clock = *cfg.clock;
  Tuner tuner(testbed.registry(), cache, cfg);
  for (auto& [id, env] : testbed.environments()) tuner.attach(id, *env);

  std::vector<SessionReport> reports;
  const Duration per_measurement = cfg.dwell * static_cast<long>(cfg.repetitions);
  for (const auto& ep : episodes) {
    const std::string subsystem(sim::subsystem_of(ep.workload.archetype));
    RegistryEnvironment* env = testbed.environment(subsystem);
    if (env == nullptr) {
      throw Error(ErrorCode::kUnknownSubsystem, "trace needs subsystem " + subsystem + " which is not declared");
    }
    clock.sleep_until(ep.start);
    const Timestamp end = ep.start + ep.duration;
    testbed.sim_for(ep.workload.archetype).set_workload(ep.workload);
    env->set_running([&clock, end, per_measurement] { return clock.now() + per_measurement <= end; });

    for (Timestamp tick = ep.start; tick < end; tick += cfg.period) {
      clock.sleep_until(tick);
      reports.push_back(tuner.run_cycle());
    }
    env->set_running({});
    testbed.sim_for(ep.workload.archetype).set_workload(std::nullopt);
  }
  return reports;
}

}  // namespace eos::trace
