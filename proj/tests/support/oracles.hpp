#pragma once

// Independent reference implementations used by the unit and acceptance
// suites. Nothing here calls the search engine or the cache matcher; the
// point is to recompute their answers from first principles.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "eos/param_spec.hpp"
#include "eos/policy_cache.hpp"
#include "eos/search_engine.hpp"
#include "eos/sim_subsystems.hpp"

namespace eostest {

using eos::ParameterSetting;
using eos::ParamSpec;
using eos::Value;

// Candidate ladder recomputed by hand: linear is every integer, exponential
// doubles from max(min,1) and always ends at max; 0 leads when min is 0.
inline std::vector<Value> ladder(const ParamSpec& p) {
  std::vector<Value> out;
  if (p.step == eos::StepMode::kLinear) {
    for (Value v = p.min;; ++v) {
      out.push_back(v);
      if (v == p.max) break;
    }
    return out;
  }
  if (p.min == 0) out.push_back(0);
  Value v = p.min == 0 ? 1 : p.min;
  while (v < p.max) {
    out.push_back(v);
    if (v > p.max / 2) break;
    v *= 2;
  }
  if (out.empty() || out.back() != p.max) out.push_back(p.max);
  return out;
}

inline bool active_under(const ParamSpec& p, const ParameterSetting& s) {
  if (!p.guard) return true;
  auto it = s.find(p.guard->parent);
  return it != s.end() && it->second == p.guard->required_value;
}

// Drops values of parameters that are inactive under the setting itself.
// Inactive values are irrelevant to the score, so two settings that differ
// only there are the same configuration.
inline ParameterSetting project(const eos::Registry& reg, const std::string& subsystem,
                                const ParameterSetting& s) {
  ParameterSetting out;
  for (const auto* p : reg.params_of(subsystem)) {
    if (active_under(*p, s)) out[p->name] = s.at(p->name);
  }
  return out;
}

// Every point of the ladder cross-product, in odometer order.
inline std::vector<ParameterSetting> cross_product(const eos::Registry& reg, const std::string& subsystem) {
  std::vector<const ParamSpec*> params = reg.params_of(subsystem);
  std::vector<std::vector<Value>> ladders;
  for (const auto* p : params) ladders.push_back(ladder(*p));
  std::vector<ParameterSetting> out;
  std::vector<std::size_t> idx(params.size(), 0);
  for (;;) {
    ParameterSetting s;
    for (std::size_t i = 0; i < params.size(); ++i) s[params[i]->name] = ladders[i][idx[i]];
    out.push_back(std::move(s));
    std::size_t k = 0;
    while (k < idx.size() && ++idx[k] == ladders[k].size()) idx[k++] = 0;
    if (k == idx.size()) break;
  }
  return out;
}

struct ArgmaxResult {
  Value best_score = 0;
  std::set<ParameterSetting> winners;  // projected
  std::size_t evaluated = 0;
};

inline ArgmaxResult brute_force_argmax(const eos::sim::SimModel& model) {
  ArgmaxResult r;
  for (const auto& s : cross_product(model.params(), model.subsystem())) {
    const Value score = model.score(s);
    ++r.evaluated;
    if (r.evaluated == 1 || score > r.best_score) {
      r.best_score = score;
      r.winners.clear();
    }
    if (score == r.best_score) r.winners.insert(project(model.params(), model.subsystem(), s));
  }
  return r;
}

// Measurements a fresh search must take: one baseline, then the full ladder
// of every parameter that is active when its turn comes. When a parameter is
// reached, parameters earlier in the order already hold their final values
// and later ones still hold their starting values.
inline std::size_t expected_measurements(const eos::Registry& reg, const std::string& subsystem,
                                         const ParameterSetting& start, const ParameterSetting& chosen) {
  std::vector<const ParamSpec*> params = reg.params_of(subsystem);
  std::vector<std::size_t> order(params.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Insertion sort by ladder size keeps ties in registration order.
  for (std::size_t i = 1; i < order.size(); ++i) {
    for (std::size_t j = i; j > 0 && ladder(*params[order[j]]).size() < ladder(*params[order[j - 1]]).size(); --j) {
      std::swap(order[j], order[j - 1]);
    }
  }
  std::size_t count = 1;
  std::set<std::string> swept;
  for (std::size_t i : order) {
    const ParamSpec& p = *params[i];
    bool active = true;
    if (p.guard) {
      const auto& parent = p.guard->parent;
      const Value v = swept.contains(parent) ? chosen.at(parent) : start.at(parent);
      active = v == p.guard->required_value;
    }
    if (active) count += ladder(p).size();
    swept.insert(p.name);
  }
  return count;
}

// Environment over a bare score model with no registry accessors, so the
// engine can be exercised in isolation. Stops running after `budget`
// measurements when one is set.
class ModelEnvironment final : public eos::Environment {
 public:
  explicit ModelEnvironment(const eos::sim::SimModel& model) : model_(model), live_(model.defaults()) {}

  ParameterSetting live_setting() override { return live_; }
  void activate(const ParameterSetting& s) override {
    model_.check_setting(s);
    live_ = s;
    activations.push_back(s);
  }
  Value measure_target() override {
    ++measurements;
    return model_.score(live_);
  }
  eos::SensorReading read_sensors() override { return model_.sensors(demand); }
  bool is_bottleneck() override { return bottleneck; }
  bool running() override { return !budget || measurements < *budget; }

  std::size_t measurements = 0;
  std::optional<std::size_t> budget;
  Value demand = 1000;
  bool bottleneck = true;
  std::vector<ParameterSetting> activations;

 private:
  const eos::sim::SimModel& model_;
  ParameterSetting live_;
};

// The similarity rule stated directly: |probe - cached| is at most
// threshold percent of the cached value. 128-bit products cannot overflow.
inline bool similar_field(Value cached, Value probe, Value threshold_pct) {
  if (cached == 0) return probe == 0;
  const Value diff = cached > probe ? cached - probe : probe - cached;
  return static_cast<unsigned __int128>(diff) * 100 <= static_cast<unsigned __int128>(threshold_pct) * cached;
}

inline bool similar(const eos::WorkloadSignature& cached, const eos::WorkloadSignature& probe) {
  if (cached.subsystem != probe.subsystem || cached.values.size() != probe.values.size()) return false;
  for (std::size_t i = 0; i < cached.values.size(); ++i) {
    if (!similar_field(cached.values[i], probe.values[i], cached.thresholds[i])) return false;
  }
  return true;
}

// Reference cache: a flat list with an explicit recency counter, linear
// scans for everything.
class ReferenceCache {
 public:
  explicit ReferenceCache(std::size_t capacity) : capacity_(capacity) {}

  struct Row {
    eos::WorkloadSignature sig;
    ParameterSetting setting;
    std::uint64_t tag;  // test-chosen identity
    std::uint64_t used;
  };

  std::optional<std::uint64_t> lookup(const eos::WorkloadSignature& probe) {
    for (auto& r : rows_) {
      if (r.sig.subsystem == probe.subsystem && similar(r.sig, probe)) {
        r.used = ++clock_;
        return r.tag;
      }
    }
    return std::nullopt;
  }

  std::optional<std::uint64_t> insert(const eos::WorkloadSignature& sig, std::uint64_t tag) {
    std::optional<std::uint64_t> evicted;
    if (rows_.size() == capacity_) {
      auto victim = std::min_element(rows_.begin(), rows_.end(),
                                     [](const Row& a, const Row& b) { return a.used < b.used; });
      evicted = victim->tag;
      rows_.erase(victim);
    }
    rows_.push_back({sig, {}, tag, ++clock_});
    return evicted;
  }

  std::set<std::uint64_t> tags() const {
    std::set<std::uint64_t> out;
    for (const auto& r : rows_) out.insert(r.tag);
    return out;
  }
  std::size_t size() const { return rows_.size(); }

 private:
  std::size_t capacity_;
  std::uint64_t clock_ = 0;
  std::vector<Row> rows_;  // per-subsystem order is preserved by the flat order
};

// Settings hold their tag so the real cache's answers can be mapped back.
inline ParameterSetting tag_setting(std::uint64_t tag) { return {{"tag", tag}}; }

inline eos::WorkloadSignature random_signature(std::mt19937_64& rng, const std::string& subsystem, std::size_t width,
                                               Value max_value) {
  eos::WorkloadSignature s;
  s.subsystem = subsystem;
  std::uniform_int_distribution<Value> val(0, max_value);
  std::uniform_int_distribution<Value> thr(0, 50);
  for (std::size_t i = 0; i < width; ++i) {
    s.values.push_back(val(rng));
    s.thresholds.push_back(thr(rng));
  }
  return s;
}

}  // namespace eostest
