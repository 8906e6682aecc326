#include "eos/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "eos/error.hpp"
#include "eos/live_tuning.hpp"
#include "eos/lock_subsystem.hpp"
#include "eos/policy_cache.hpp"
#include "eos/report.hpp"
#include "eos/search_engine.hpp"
#include "eos/sim_subsystems.hpp"
#include "eos/trace.hpp"
#include "text_util.hpp"

namespace eos::cli {

namespace {

using Seconds = std::chrono::duration<double>;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Duration to_duration(double seconds) {
  return std::chrono::duration_cast<Duration>(Seconds(seconds));
}

struct CommonOptions {
  std::string spec_path;
  std::string cache_path = "./eos-cache";
  bool virtual_clock = false;
  bool wall_clock = false;
  double dwell_sec = 5.0;
  double period_sec = 900.0;
  unsigned repetitions = 1;
  std::string format = "text";
  std::string out_path;
};

struct TuneOptions {
  CommonOptions common;
  std::string sim;
  std::string workload;
  std::optional<Value> demand;
  std::uint64_t seed = 0;
  std::string trace_path;
  bool live_lock = false;
  lock::ContentionConfig contention;
  std::size_t periods = 1;
};

struct CacheOptions {
  std::string cache_path = "./eos-cache";
  std::size_t index = 0;
  bool yes = false;
  std::string format = "text";
};

struct BenchOptions {
  lock::ContentionConfig contention{2, 50, 200};
  double duration_sec = 0.5;
  std::string pin;
  bool tuned = false;
  double dwell_sec = 0.1;
};

std::string resolve_cache_path(const std::string& flag) {
  if (const char* env = std::getenv("EOS_CACHE"); env != nullptr && *env != '\0') return env;
  return flag;
}

void add_common(CLI::App& cmd, CommonOptions& o) {
  cmd.add_option("--spec", o.spec_path, "parameter spec file");
  cmd.add_option("--cache", o.cache_path, "policy cache file (EOS_CACHE overrides)");
  auto* v = cmd.add_flag("--virtual", o.virtual_clock, "virtual clock (default for simulators)");
  auto* w = cmd.add_flag("--wall", o.wall_clock, "wall clock");
  v->excludes(w);
  cmd.add_option("--dwell", o.dwell_sec, "seconds per measurement")->check(CLI::PositiveNumber);
  cmd.add_option("--period", o.period_sec, "seconds between tuning ticks")->check(CLI::PositiveNumber);
  cmd.add_option("--repetitions", o.repetitions, "probes averaged per measurement")->check(CLI::Range(1u, 1000u));
  cmd.add_option("--format", o.format, "report format")->check(CLI::IsMember({"text", "csv"}));
  cmd.add_option("--out", o.out_path, "write the report here instead of stdout");
}

TunerConfig tuner_config(const CommonOptions& o, Clock& clock) {
  TunerConfig cfg;
  cfg.dwell = to_duration(o.dwell_sec);
  cfg.period = to_duration(o.period_sec);
  cfg.repetitions = o.repetitions;
  cfg.clock = &clock;
  cfg.validate();
  return cfg;
}

// Output files are checked up front so a typo does not cost a whole session.
void check_parent_dir(const std::string& path, std::string_view what) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw UsageError(std::string(what) + " directory " + parent.string() + " does not exist");
  }
}

std::optional<std::string> read_spec(const CommonOptions& o) {
  if (o.spec_path.empty()) return std::nullopt;
  try {
    return text::read_file(o.spec_path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kParseError, "cannot read spec file " + o.spec_path + ": " + e.detail());
  }
}

PolicyCache open_cache(const std::string& path, std::ostream& err) {
  if (!std::filesystem::exists(path)) return PolicyCache();
  auto loaded = load_cache(path);
  if (loaded.warning) err << "warning: " << *loaded.warning << " (starting with an empty cache)\n";
  return std::move(loaded.cache);
}

void emit_reports(const CommonOptions& o, const std::vector<SessionReport>& reports, std::ostream& out) {
  const std::string body = o.format == "csv" ? reports_to_csv(reports) : reports_to_text(reports);
  if (o.out_path.empty()) {
    out << body;
  } else {
    text::write_file(o.out_path, body);
  }
}

std::vector<SessionReport> run_sim(const TuneOptions& o, const std::optional<std::string>& spec, PolicyCache& cache,
                                   Clock& clock) {
  const auto archetype = sim::parse_archetype(o.workload);
  if (!archetype) throw UsageError("unknown workload '" + o.workload + "'");
  if (std::string(sim::subsystem_of(*archetype)) != (o.sim == "disk" ? sim::kDiskSubsystem : sim::kLockSubsystem)) {
    throw UsageError("workload '" + o.workload + "' does not belong to the " + o.sim + " simulator");
  }
  trace::SimTestbed testbed(spec ? std::optional<std::string_view>(*spec) : std::nullopt);
  const Value demand = o.demand ? *o.demand : sim::default_demand(*archetype);
  testbed.sim_for(*archetype).set_workload(sim::SimWorkload{*archetype, demand, o.seed});
  Tuner tuner(testbed.registry(), cache, tuner_config(o.common, clock));
  for (auto& [id, env] : testbed.environments()) tuner.attach(id, *env);
  return tuner.run(o.periods);
}

std::vector<SessionReport> run_trace(const std::string& trace_path, const CommonOptions& common,
                                     const std::optional<std::string>& spec, PolicyCache& cache, Clock& clock) {
  const auto episodes = trace::load_trace_path(trace_path);
  trace::SimTestbed testbed(spec ? std::optional<std::string_view>(*spec) : std::nullopt);
  return trace::replay(episodes, testbed, cache, tuner_config(common, clock));
}

std::vector<SessionReport> run_live_lock(const TuneOptions& o, PolicyCache& cache, std::ostream& err) {
  if (std::thread::hardware_concurrency() < 2) {
    err << "warning: fewer than 2 hardware threads; contention results will be skewed\n";
  }
  WallClock clock;
  lock::LockTuning tuning;
  lock::MixedLock mlock(&tuning);
  lock::ContentionWorkload workload(mlock, o.contention);
  lock::LockSubsystem subsystem(mlock, workload);
  Registry registry;
  subsystem.register_into(registry);
  RegistryEnvironment env(registry, std::string(sim::kLockSubsystem), [&workload] { return workload.running(); });
  Tuner tuner(registry, cache, tuner_config(o.common, clock));
  tuner.attach(std::string(sim::kLockSubsystem), env);
  workload.start();
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  // Fresh windows so the first detection does not see the warm-up.
  (void)subsystem.probe_busy();
  (void)subsystem.probe_sensors();
  (void)subsystem.probe_target();
  std::vector<SessionReport> reports;
  try {
    reports = tuner.run(o.periods);
  } catch (...) {
    workload.stop();
    throw;
  }
  workload.stop();
  return reports;
}

int cmd_tune(const TuneOptions& o, std::ostream& out, std::ostream& err) {
  const int sources = int(!o.sim.empty()) + int(!o.trace_path.empty()) + int(o.live_lock);
  if (sources != 1) throw UsageError("choose exactly one of --sim, --trace, --live-lock");
  if (!o.sim.empty() && o.workload.empty()) throw UsageError("--sim needs --workload");
  if (o.live_lock && o.common.virtual_clock) throw UsageError("--live-lock runs on the wall clock only");

  const auto spec = read_spec(o.common);
  const std::string cache_path = resolve_cache_path(o.common.cache_path);
  check_parent_dir(cache_path, "cache");
  if (!o.common.out_path.empty()) check_parent_dir(o.common.out_path, "--out");
  PolicyCache cache = open_cache(cache_path, err);

  std::vector<SessionReport> reports;
  VirtualClock vclock;
  WallClock wclock;
  Clock& clock = o.common.wall_clock ? static_cast<Clock&>(wclock) : static_cast<Clock&>(vclock);
  try {
    if (o.live_lock) {
      reports = run_live_lock(o, cache, err);
    } else if (!o.trace_path.empty()) {
      reports = run_trace(o.trace_path, o.common, spec, cache, clock);
    } else {
      reports = run_sim(o, spec, cache, clock);
    }
  } catch (...) {
    cache.persist(cache_path);
    throw;
  }
  cache.persist(cache_path);
  emit_reports(o.common, reports, out);
  for (const auto& r : reports) {
    if (r.error) {
      err << "cycle " << r.cycle << " failed: " << *r.error << '\n';
      return kExitRuntime;
    }
  }
  return kExitOk;
}

std::string join(const std::vector<Value>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

int cmd_cache_ls(const CacheOptions& o, std::ostream& out, std::ostream& err) {
  const std::string path = resolve_cache_path(o.cache_path);
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::kIoError, "no cache file at " + path);
  auto loaded = load_cache(path);
  if (loaded.warning) err << "warning: " << *loaded.warning << '\n';
  const auto entries = loaded.cache.entries();
  if (o.format == "csv") {
    out << "index,subsystem,signature,thresholds,complete,lru_rank\n";
  } else {
    out << "index  subsystem  signature  complete  lru_rank\n";
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const auto rank = loaded.cache.lru_rank(e.id);
    if (o.format == "csv") {
      out << i << ',' << e.signature.subsystem << ",\"" << join(e.signature.values) << "\",\""
          << join(e.signature.thresholds) << "\"," << (e.complete ? 1 : 0) << ',' << rank << '\n';
    } else {
      out << i << "  " << e.signature.subsystem << "  [" << join(e.signature.values) << "]  "
          << (e.complete ? "complete" : "incomplete") << "  " << rank << '\n';
    }
  }
  return kExitOk;
}

int cmd_cache_show(const CacheOptions& o, std::ostream& out, std::ostream& err) {
  const std::string path = resolve_cache_path(o.cache_path);
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::kIoError, "no cache file at " + path);
  auto loaded = load_cache(path);
  if (loaded.warning) err << "warning: " << *loaded.warning << '\n';
  const auto entries = loaded.cache.entries();
  if (o.index >= entries.size()) {
    throw Error(ErrorCode::kInvalidConfig,
                "no entry " + std::to_string(o.index) + " (cache holds " + std::to_string(entries.size()) + ")");
  }
  const auto& e = entries[o.index];
  out << "index: " << o.index << '\n'
      << "subsystem: " << e.signature.subsystem << '\n'
      << "signature: " << join(e.signature.values) << '\n'
      << "thresholds: " << join(e.signature.thresholds) << '\n'
      << "setting: " << setting_to_string(e.setting) << '\n'
      << "complete: " << (e.complete ? "yes" : "no") << '\n'
      << "resume_state: " << (e.resume_state ? encode_search_state(*e.resume_state) : std::string("none")) << '\n'
      << "lru_rank: " << loaded.cache.lru_rank(e.id) << '\n';
  return kExitOk;
}

int cmd_cache_clear(const CacheOptions& o, std::ostream& out) {
  if (!o.yes) throw UsageError("refusing to clear the cache without --yes");
  const std::string path = resolve_cache_path(o.cache_path);
  PolicyCache().persist(path);
  out << "cleared " << path << '\n';
  return kExitOk;
}

double bench_pinned(const BenchOptions& o, lock::Protocol p) {
  return lock::measure_pinned(o.contention, p, to_duration(o.duration_sec));
}

int cmd_lockbench(const BenchOptions& o, std::ostream& out, std::ostream& err) {
  if (std::thread::hardware_concurrency() < 2) {
    err << "warning: fewer than 2 hardware threads; contention results will be skewed\n";
  }
  std::optional<lock::Protocol> pin;
  if (!o.pin.empty()) {
    pin = lock::parse_protocol(o.pin);
    if (!pin) throw UsageError("unknown protocol '" + o.pin + "'");
  }
  const auto& c = o.contention;
  out << "protocol,threads,critical,idle,duration_sec,acquisitions_per_sec,selected\n";
  auto row = [&](std::string_view name, double rate, std::string_view selected) {
    out << name << ',' << c.threads << ',' << c.critical_units << ',' << c.idle_units << ',' << o.duration_sec
        << ',' << static_cast<std::uint64_t>(rate + 0.5) << ',' << selected << '\n';
  };
  const bool all = !pin && !o.tuned;
  if (pin) {
    row(lock::to_string(*pin), bench_pinned(o, *pin), "-");
  } else if (all) {
    for (auto p : lock::kAllProtocols) row(lock::to_string(p), bench_pinned(o, p), "-");
  }
  if (o.tuned || all) {
    const auto tuned = lock::tune_live_lock(c, to_duration(o.dwell_sec));
    const double rate = lock::measure_setting(c, tuned.setting, to_duration(o.duration_sec));
    row("tuned", rate, lock::to_string(tuned.protocol));
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Workload-aware parameter tuner", "eos"};
  app.require_subcommand(1);

  TuneOptions tune;
  auto* tune_cmd = app.add_subcommand("tune", "run tuning ticks against a simulator, a trace or a live lock");
  add_common(*tune_cmd, tune.common);
  tune_cmd->add_option("--sim", tune.sim, "simulated subsystem")->check(CLI::IsMember({"disk", "lock"}));
  tune_cmd->add_option("--workload", tune.workload, "seqscan|oltp|mixed for disk, low|mid|high for lock");
  tune_cmd->add_option("--demand", tune.demand, "work units per second")->check(CLI::PositiveNumber);
  tune_cmd->add_option("--seed", tune.seed, "0 for the shipped model");
  tune_cmd->add_option("--trace", tune.trace_path, "workload trace CSV");
  tune_cmd->add_flag("--live-lock", tune.live_lock, "tune a mixed lock under a live contention workload");
  tune_cmd->add_option("--threads", tune.contention.threads)->check(CLI::Range(1u, 1024u));
  tune_cmd->add_option("--critical", tune.contention.critical_units, "spin units inside the lock");
  tune_cmd->add_option("--idle", tune.contention.idle_units, "spin units between acquisitions");
  tune_cmd->add_option("--periods", tune.periods, "number of tuning ticks")->check(CLI::PositiveNumber);

  TuneOptions replay;
  auto* replay_cmd = app.add_subcommand("replay", "replay a workload trace on the simulators");
  add_common(*replay_cmd, replay.common);
  replay_cmd->add_option("--trace", replay.trace_path, "workload trace CSV")->required();

  CacheOptions cache;
  auto* cache_cmd = app.add_subcommand("cache", "inspect or clear the policy cache");
  cache_cmd->require_subcommand(1);
  auto add_cache_path = [&cache](CLI::App* c) {
    c->add_option("--cache", cache.cache_path, "policy cache file (EOS_CACHE overrides)");
  };
  auto* ls_cmd = cache_cmd->add_subcommand("ls", "list entries");
  add_cache_path(ls_cmd);
  ls_cmd->add_option("--format", cache.format)->check(CLI::IsMember({"text", "csv"}));
  auto* show_cmd = cache_cmd->add_subcommand("show", "print one entry");
  add_cache_path(show_cmd);
  show_cmd->add_option("--index", cache.index, "list position")->required();
  auto* clear_cmd = cache_cmd->add_subcommand("clear", "drop every entry");
  add_cache_path(clear_cmd);
  clear_cmd->add_flag("--yes", cache.yes, "confirm");

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("lockbench", "throughput of the mixed lock per protocol");
  bench_cmd->add_option("--threads", bench.contention.threads)->check(CLI::Range(1u, 1024u));
  bench_cmd->add_option("--critical", bench.contention.critical_units, "spin units inside the lock");
  bench_cmd->add_option("--idle", bench.contention.idle_units, "spin units between acquisitions");
  bench_cmd->add_option("--duration", bench.duration_sec, "seconds per row")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--pin", bench.pin, "ttas|ticket|mcs")->check(CLI::IsMember({"ttas", "ticket", "mcs"}));
  bench_cmd->add_flag("--tuned", bench.tuned, "let the tuner pick the protocol");
  bench_cmd->add_option("--dwell", bench.dwell_sec, "tuner seconds per measurement")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (tune_cmd->parsed()) return cmd_tune(tune, out, err);
    if (replay_cmd->parsed()) return cmd_tune(replay, out, err);
    if (ls_cmd->parsed()) return cmd_cache_ls(cache, out, err);
    if (show_cmd->parsed()) return cmd_cache_show(cache, out, err);
    if (clear_cmd->parsed()) return cmd_cache_clear(cache, out);
    if (bench_cmd->parsed()) return cmd_lockbench(bench, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kParseError ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace eos::cli
