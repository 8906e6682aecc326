#include <string>

#include "eos/error.hpp"
#include "eos/sim_subsystems.hpp"
#include "text_util.hpp"

namespace eos::sim {

// Keep in sync with data/sim_constants.txt, data/disk.spec and
// data/sync.spec (checked by sim_subsystems_test).
namespace {

constexpr std::string_view kConstants = R"(# Simulator constants.
#
# base=     scores indexed by the selector parameter (disk: policy, sync: method_tuner)
# optimum=  ideal value of every other parameter
# sensors=  workload signature; "demand" stands for the workload's demand
# thresholds= similarity percentage per sensor field

default disk policy=0 queue_depth=8 readahead=2 quantum=8
model disk seqscan base=81000,85000,200000 optimum=queue_depth:64,readahead:8,quantum:4 sensors=512,95,90,demand,4 thresholds=20,10,10,20,20
model disk oltp base=120000,260000,150000 optimum=queue_depth:32,readahead:0,quantum:2 sensors=8,5,70,demand,32 thresholds=20,10,10,20,20
model disk mixed base=90000,100000,240000 optimum=queue_depth:16,readahead:4,quantum:16 sensors=64,50,60,demand,12 thresholds=20,10,10,20,20

# method_tuner: 0 = TTAS, 1 = back-off ticket, 2 = MCS
default sync method_tuner=0 val_tuner=0
model sync low base=9000,6000,5000 optimum=val_tuner:4 sensors=150 thresholds=20
model sync mid base=3000,12000,3500 optimum=val_tuner:4 sensors=900 thresholds=20
model sync high base=1500,4500,8000 optimum=val_tuner:4 sensors=4000 thresholds=20
)";

constexpr std::string_view kDiskSpec = R"(# Simulated disk I/O scheduling subsystem.
subsystem disk busy_threshold=80
param disk.policy min=0 max=2 step=linear
param disk.queue_depth min=1 max=128 step=exponential
param disk.readahead min=0 max=9 step=linear
param disk.quantum min=1 max=16 step=exponential guard=policy=2
)";

constexpr std::string_view kLockSpec = R"(# Lock subsystem: protocol selector and back-off polling weight.
subsystem sync busy_threshold=80
param sync.method_tuner min=0 max=2 step=linear
param sync.val_tuner min=0 max=16 step=exponential guard=method_tuner=1
)";

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::kParseError, msg, line);
}

Value number(std::string_view s, std::size_t line) {
  auto v = text::parse_u64(s);
  if (!v) fail(line, "bad number '" + std::string(s) + "'");
  return *v;
}

std::vector<Value> numbers(std::string_view s, std::size_t line) {
  std::vector<Value> out;
  for (auto f : text::split(s, ',')) out.push_back(number(f, line));
  return out;
}

}  // namespace

std::string_view builtin_constants_text() { return kConstants; }
std::string_view disk_spec_text() { return kDiskSpec; }
std::string_view lock_spec_text() { return kLockSpec; }

const SimConstants& builtin_constants() {
  static const SimConstants constants = parse_sim_constants(kConstants);
  return constants;
}

SimConstants parse_sim_constants(std::string_view text) {
  SimConstants out;
  text::for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
    auto line = text::strip_comment(raw);
    if (line.empty()) return;
    auto tok = text::tokens(line);
    if (tok[0] == "default") {
      if (tok.size() < 2) fail(line_no, "default needs a subsystem");
      auto& d = out.defaults[std::string(tok[1])];
      for (std::size_t i = 2; i < tok.size(); ++i) {
        auto eq = tok[i].find('=');
        if (eq == std::string_view::npos || eq == 0) fail(line_no, "expected <name>=<value>");
        d[std::string(tok[i].substr(0, eq))] = number(tok[i].substr(eq + 1), line_no);
      }
    } else if (tok[0] == "model") {
      if (tok.size() < 3) fail(line_no, "model needs <subsys> <archetype>");
      auto a = parse_archetype(tok[2]);
      if (!a) fail(line_no, "unknown archetype '" + std::string(tok[2]) + "'");
      if (subsystem_of(*a) != tok[1]) fail(line_no, "archetype does not belong to " + std::string(tok[1]));
      ArchetypeModel m;
      bool have_base = false, have_sensors = false, have_thresholds = false;
      for (std::size_t i = 3; i < tok.size(); ++i) {
        auto eq = tok[i].find('=');
        if (eq == std::string_view::npos) fail(line_no, "expected key=value");
        auto key = tok[i].substr(0, eq);
        auto val = tok[i].substr(eq + 1);
        if (key == "base") {
          m.base = numbers(val, line_no);
          have_base = true;
        } else if (key == "optimum") {
          for (auto kv : text::split(val, ',')) {
            auto colon = kv.find(':');
            if (colon == std::string_view::npos || colon == 0) fail(line_no, "optimum needs <name>:<value>");
            m.optima[std::string(kv.substr(0, colon))] = number(kv.substr(colon + 1), line_no);
          }
        } else if (key == "sensors") {
          for (auto f : text::split(val, ',')) {
            if (f == "demand") {
              m.sensors.emplace_back(std::nullopt);
            } else {
              m.sensors.emplace_back(number(f, line_no));
            }
          }
          have_sensors = true;
        } else if (key == "thresholds") {
          m.thresholds = numbers(val, line_no);
          have_thresholds = true;
        } else {
          fail(line_no, "unknown key '" + std::string(key) + "'");
        }
      }
      if (!have_base || !have_sensors || !have_thresholds) fail(line_no, "model needs base, sensors and thresholds");
      if (m.sensors.size() != m.thresholds.size()) fail(line_no, "sensors and thresholds differ in length");
      out.models[*a] = std::move(m);
    } else {
      fail(line_no, "unknown declaration '" + std::string(tok[0]) + "'");
    }
  });
  return out;
}

}  // namespace eos::sim
