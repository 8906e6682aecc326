#include "eos/lock_subsystem.hpp"

#include "eos/error.hpp"

namespace eos::lock {

ContentionWorkload::ContentionWorkload(MixedLock& lock, ContentionConfig cfg)
    : lock_(lock), cfg_(cfg), per_thread_(std::make_unique<PerThread[]>(cfg.threads)) {
  if (cfg_.threads == 0) throw Error(ErrorCode::kInvalidConfig, "contention workload needs threads");
}

ContentionWorkload::~ContentionWorkload() { stop(); }

void ContentionWorkload::start() {
  if (running()) return;
  stop_.store(false, std::memory_order_release);
  epoch_ = std::chrono::steady_clock::now();
  threads_.reserve(cfg_.threads);
  for (unsigned i = 0; i < cfg_.threads; ++i) {
    threads_.emplace_back([this, i] { worker(per_thread_[i]); });
  }
  running_.store(true, std::memory_order_release);
}

void ContentionWorkload::stop() {
  stop_.store(true, std::memory_order_release);
  for (auto& t : threads_) {
    if (t.joinable()) t.join();
  }
  threads_.clear();
  running_.store(false, std::memory_order_release);
}

void ContentionWorkload::worker(PerThread& mine) {
  WaiterNode node;
  while (!stop_.load(std::memory_order_relaxed)) {
    const auto t0 = std::chrono::steady_clock::now();
    const ReleaseMode rm = lock_.acquire(node);
    const auto t1 = std::chrono::steady_clock::now();
    ++counter_;
    spin_units(cfg_.critical_units);
    lock_.release(node, rm);
    mine.acquisitions.fetch_add(1, std::memory_order_relaxed);
    mine.wait_ns.fetch_add(static_cast<std::uint64_t>((t1 - t0).count()), std::memory_order_relaxed);
    spin_units(cfg_.idle_units);
  }
}

ContentionTotals ContentionWorkload::totals() const {
  ContentionTotals t;
  for (unsigned i = 0; i < cfg_.threads; ++i) {
    t.acquisitions += per_thread_[i].acquisitions.load(std::memory_order_relaxed);
    t.wait_ns += per_thread_[i].wait_ns.load(std::memory_order_relaxed);
  }
  t.at = std::chrono::steady_clock::now() - epoch_;
  return t;
}

LockSubsystem::LockSubsystem(MixedLock& lock, ContentionWorkload& workload) : lock_(lock), workload_(workload) {
  const auto now = workload_.totals();
  target_window_.last = now;
  sensor_window_.last = now;
  busy_window_.last = now;
}

ContentionTotals LockSubsystem::advance(Window& w) {
  std::lock_guard<std::mutex> guard(mu_);
  const ContentionTotals now = workload_.totals();
  ContentionTotals delta;
  delta.acquisitions = now.acquisitions - w.last.acquisitions;
  delta.wait_ns = now.wait_ns - w.last.wait_ns;
  delta.at = now.at - w.last.at;
  w.last = now;
  return delta;
}

Value LockSubsystem::probe_target() {
  const auto d = advance(target_window_);
  if (d.at.count() <= 0) return 0;
  return static_cast<Value>(static_cast<long double>(d.acquisitions) * 1e9L /
                            static_cast<long double>(d.at.count()));
}

SensorReading LockSubsystem::probe_sensors() {
  const auto d = advance(sensor_window_);
  const Value mean = d.acquisitions == 0 ? 0 : d.wait_ns / d.acquisitions;
  return SensorReading{{mean}, {kLatencyThreshold}};
}

double LockSubsystem::probe_busy() {
  const auto d = advance(busy_window_);
  const long double span = static_cast<long double>(d.at.count()) * workload_.config().threads;
  if (span <= 0) return 0.0;
  return static_cast<double>(std::min<long double>(1.0L, static_cast<long double>(d.wait_ns) / span));
}

void LockSubsystem::register_into(Registry& registry, unsigned busy_threshold) {
  SubsystemSpec spec;
  spec.id = "sync";
  spec.busy_threshold = busy_threshold;
  registry.register_subsystem(std::move(spec));

  LockTuning& tuning = lock_.tuning();
  ParamSpec method{"method_tuner", "sync", 0, 2, StepMode::kLinear, std::nullopt,
                   ParamAccessor([&tuning] { return tuning.method_tuner.load(std::memory_order_acquire); },
                                 [&tuning](Value v) { tuning.method_tuner.store(v, std::memory_order_release); })};
  ParamSpec weight{"val_tuner", "sync", 0, 16, StepMode::kExponential, Guard{"method_tuner", 1},
                   ParamAccessor(&tuning.val_tuner)};
  registry.register_param(std::move(method));
  registry.register_param(std::move(weight));

  registry.bind_probes(
      "sync", [this] { return probe_sensors(); }, [this] { return probe_target(); },
      [this, busy_threshold] { return probe_busy() * 100.0 >= static_cast<double>(busy_threshold); });
}

}  // namespace eos::lock
