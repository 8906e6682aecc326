#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eos/param_spec.hpp"
#include "eos/search_state.hpp"

namespace eos {

struct WorkloadSignature {
  std::string subsystem;
  std::vector<Value> values;
  std::vector<Value> thresholds;  // percent, one per value

  friend bool operator==(const WorkloadSignature&, const WorkloadSignature&) = default;
};

// True when every field of `probe` lies within the cached field's threshold
// percentage of the cached value. A cached 0 matches only 0.
bool signature_matches(const WorkloadSignature& cached, const WorkloadSignature& probe);

using EntryId = std::uint64_t;

struct CacheEntry {
  WorkloadSignature signature;
  ParameterSetting setting;
  bool complete = true;
  std::optional<SearchState> resume_state;  // present iff !complete
  std::uint64_t last_used = 0;
  EntryId id = 0;  // assigned by the cache, not persisted
};

inline constexpr std::size_t kDefaultCacheCapacity = 1000;

// Per-subsystem lists of (signature -> setting) with first-match lookup and
// least-recently-used eviction across the whole cache.
//
// List order is insertion order and never changes on lookup; recency only
// drives eviction.
class PolicyCache {
 public:
  explicit PolicyCache(std::size_t capacity = kDefaultCacheCapacity);

  // Fixes the signature width for a subsystem. Without a declaration the
  // width of the first stored entry is used.
  void declare_subsystem(const std::string& id, std::size_t sensor_count);

  // First entry in list order matching `sig`; refreshes its recency.
  std::optional<CacheEntry> lookup(const WorkloadSignature& sig);

  // Appends `entry`, evicting the least-recently-used entry when full.
  // Returns the id of the stored entry.
  EntryId insert(CacheEntry entry);

  // Replaces the stored entry `id` in place, keeping its list position.
  // Returns false when `id` is no longer cached.
  bool update(EntryId id, CacheEntry entry);

  void clear();

  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  bool contains(EntryId id) const;

  // Snapshot of all entries: subsystems in first-insertion order, entries in
  // list order.
  std::vector<CacheEntry> entries() const;

  // 0 for the least recently used entry, size()-1 for the most recent.
  std::size_t lru_rank(EntryId id) const;

  // Text serialization (see persist()).
  std::string serialize() const;

  void persist(const std::string& path) const;

 private:
  friend struct CacheLoader;

  static void check_entry(const CacheEntry& e);
  void check_width(const WorkloadSignature& sig) const;
  void evict_one();

  std::size_t capacity_;
  std::uint64_t clock_ = 0;
  EntryId next_id_ = 1;
  std::vector<std::string> subsystem_order_;
  std::map<std::string, std::vector<CacheEntry>> lists_;
  std::map<std::string, std::size_t> widths_;
};

struct CacheLoadResult {
  PolicyCache cache;
  std::optional<std::string> warning;  // set when the file was corrupt
};

// Parses serialized cache text. A checksum or grammar failure yields an empty
// cache and a warning instead of throwing.
CacheLoadResult parse_cache(std::string_view text, std::size_t capacity = kDefaultCacheCapacity);

// Reads `path`. Throws kIoError when the file cannot be read.
CacheLoadResult load_cache(const std::string& path, std::size_t capacity = kDefaultCacheCapacity);

std::uint32_t crc32_of(std::string_view bytes);

}  // namespace eos
