#include "eos/live_tuning.hpp"

#include <thread>

namespace eos::lock {

LiveTuneResult tune_live_lock(const ContentionConfig& workload, Duration dwell, unsigned repetitions,
                              Duration warmup) {
  LockTuning tuning;
  MixedLock lock(&tuning);
  ContentionWorkload load(lock, workload);
  Registry registry;
  LockSubsystem subsystem(lock, load);
  subsystem.register_into(registry);
  RegistryEnvironment env(registry, "sync");

  WallClock clock;
  TunerConfig cfg;
  cfg.clock = &clock;
  cfg.dwell = dwell;
  cfg.period = dwell;
  cfg.repetitions = repetitions;

  load.start();
  std::this_thread::sleep_for(warmup);
  (void)subsystem.probe_target();  // start the first window after warm-up
  auto outcome = orthogonal_search(registry, "sync", env, std::nullopt, cfg);
  load.stop();

  LiveTuneResult result;
  result.setting = outcome.setting;
  result.protocol = protocol_from_tuner(outcome.setting.at("method_tuner"));
  result.report = std::move(outcome.report);
  return result;
}

double measure_setting(const ContentionConfig& workload, const ParameterSetting& setting, Duration duration,
                       Duration warmup) {
  LockTuning tuning;
  if (auto it = setting.find("method_tuner"); it != setting.end()) tuning.method_tuner = it->second;
  if (auto it = setting.find("val_tuner"); it != setting.end()) tuning.val_tuner = it->second;
  MixedLock lock(&tuning);
  ContentionWorkload load(lock, workload);
  load.start();
  std::this_thread::sleep_for(warmup);
  const auto before = load.totals();
  std::this_thread::sleep_for(duration);
  const auto after = load.totals();
  load.stop();
  const auto span = (after.at - before.at).count();
  if (span <= 0) return 0.0;
  return static_cast<double>(after.acquisitions - before.acquisitions) * 1e9 / static_cast<double>(span);
}

double measure_pinned(const ContentionConfig& workload, Protocol protocol, Duration duration, Duration warmup) {
  return measure_setting(workload, {{"method_tuner", static_cast<Value>(protocol)}, {"val_tuner", 0}}, duration,
                         warmup);
}

}  // namespace eos::lock
