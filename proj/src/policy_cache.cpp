#include "eos/policy_cache.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include <zlib.h>

#include "eos/error.hpp"
#include "text_util.hpp"

namespace eos {

bool signature_matches(const WorkloadSignature& cached, const WorkloadSignature& probe) {
  if (cached.subsystem != probe.subsystem || cached.values.size() != probe.values.size()) return false;
  for (std::size_t i = 0; i < cached.values.size(); ++i) {
    const unsigned __int128 c = cached.values[i];
    const unsigned __int128 s = probe.values[i];
    const unsigned __int128 diff = s > c ? s - c : c - s;
    // |s - c| <= (t / 100) * c, kept in integers.
    if (diff * 100 > static_cast<unsigned __int128>(cached.thresholds[i]) * c) return false;
  }
  return true;
}

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

PolicyCache::PolicyCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw Error(ErrorCode::kInvalidConfig, "cache capacity must be positive");
}

void PolicyCache::declare_subsystem(const std::string& id, std::size_t sensor_count) {
  widths_[id] = sensor_count;
}

void PolicyCache::check_entry(const CacheEntry& e) {
  if (e.signature.values.size() != e.signature.thresholds.size()) {
    throw Error(ErrorCode::kFieldCountMismatch, "signature values and thresholds differ in length");
  }
  if (e.complete == e.resume_state.has_value()) {
    throw Error(ErrorCode::kInvalidConfig, "incomplete entries need a resume state and complete ones none");
  }
}

void PolicyCache::check_width(const WorkloadSignature& sig) const {
  if (sig.values.size() != sig.thresholds.size()) {
    throw Error(ErrorCode::kFieldCountMismatch, "signature values and thresholds differ in length");
  }
  if (auto it = widths_.find(sig.subsystem); it != widths_.end() && it->second != sig.values.size()) {
    throw Error(ErrorCode::kFieldCountMismatch,
                sig.subsystem + " expects " + std::to_string(it->second) + " sensor fields, got " +
                    std::to_string(sig.values.size()));
  }
}

std::optional<CacheEntry> PolicyCache::lookup(const WorkloadSignature& sig) {
  check_width(sig);
  auto it = lists_.find(sig.subsystem);
  if (it == lists_.end()) return std::nullopt;
  for (auto& e : it->second) {
    if (signature_matches(e.signature, sig)) {
      e.last_used = ++clock_;
      return e;
    }
  }
  return std::nullopt;
}

void PolicyCache::evict_one() {
  CacheEntry* victim = nullptr;
  std::string victim_list;
  for (auto& [id, list] : lists_) {
    for (auto& e : list) {
      if (!victim || e.last_used < victim->last_used) {
        victim = &e;
        victim_list = id;
      }
    }
  }
  if (!victim) return;
  auto& list = lists_[victim_list];
  const EntryId gone = victim->id;
  list.erase(std::remove_if(list.begin(), list.end(), [&](const CacheEntry& e) { return e.id == gone; }),
             list.end());
}

EntryId PolicyCache::insert(CacheEntry entry) {
  check_entry(entry);
  check_width(entry.signature);
  widths_.emplace(entry.signature.subsystem, entry.signature.values.size());
  if (size() >= capacity_) evict_one();
  entry.last_used = ++clock_;
  entry.id = next_id_++;
  const std::string sub = entry.signature.subsystem;
  if (!lists_.contains(sub)) subsystem_order_.push_back(sub);
  lists_[sub].push_back(std::move(entry));
  return lists_[sub].back().id;
}

bool PolicyCache::update(EntryId id, CacheEntry entry) {
  check_entry(entry);
  for (auto& [sub, list] : lists_) {
    for (auto& e : list) {
      if (e.id != id) continue;
      if (entry.signature.subsystem != sub) {
        throw Error(ErrorCode::kInvalidConfig, "update cannot move an entry between subsystems");
      }
      entry.id = id;
      entry.last_used = ++clock_;
      e = std::move(entry);
      return true;
    }
  }
  return false;
}

void PolicyCache::clear() {
  lists_.clear();
  subsystem_order_.clear();
}

std::size_t PolicyCache::size() const {
  std::size_t n = 0;
  for (const auto& [_, list] : lists_) n += list.size();
  return n;
}

bool PolicyCache::contains(EntryId id) const {
  for (const auto& [_, list] : lists_) {
    for (const auto& e : list) {
      if (e.id == id) return true;
    }
  }
  return false;
}

std::vector<CacheEntry> PolicyCache::entries() const {
  std::vector<CacheEntry> out;
  for (const auto& sub : subsystem_order_) {
    auto it = lists_.find(sub);
    if (it == lists_.end()) continue;
    out.insert(out.end(), it->second.begin(), it->second.end());
  }
  return out;
}

std::size_t PolicyCache::lru_rank(EntryId id) const {
  std::uint64_t stamp = 0;
  bool found = false;
  std::vector<std::uint64_t> stamps;
  for (const auto& [_, list] : lists_) {
    for (const auto& e : list) {
      stamps.push_back(e.last_used);
      if (e.id == id) {
        stamp = e.last_used;
        found = true;
      }
    }
  }
  if (!found) throw Error(ErrorCode::kInvalidConfig, "entry not cached");
  return static_cast<std::size_t>(std::count_if(stamps.begin(), stamps.end(),
                                                [&](std::uint64_t s) { return s < stamp; }));
}

namespace {

template <typename Seq>
void join_numbers(std::ostringstream& out, const Seq& seq) {
  for (std::size_t i = 0; i < seq.size(); ++i) out << (i ? "," : "") << seq[i];
}

}  // namespace

std::string PolicyCache::serialize() const {
  std::ostringstream body;
  const auto all = entries();
  for (const auto& e : all) {
    body << e.signature.subsystem << " | ";
    join_numbers(body, e.signature.values);
    body << " | ";
    join_numbers(body, e.signature.thresholds);
    body << " | ";
    bool first = true;
    for (const auto& [name, value] : e.setting) {
      body << (first ? "" : ";") << name << '=' << value;
      first = false;
    }
    body << " | " << (e.complete ? 1 : 0) << " | "
         << (e.resume_state ? encode_search_state(*e.resume_state) : std::string("-")) << " | "
         << lru_rank(e.id) << '\n';
  }
  const std::string b = body.str();
  std::ostringstream out;
  out << "EOSCACHE v1 " << all.size() << ' ' << crc32_of(b) << '\n' << b;
  return out.str();
}

void PolicyCache::persist(const std::string& path) const { text::write_file(path, serialize()); }

struct CacheLoader {
  static CacheLoadResult parse(std::string_view text, std::size_t capacity);
};

namespace {

[[noreturn]] void corrupt(const std::string& why) { throw Error(ErrorCode::kCorruptCacheFile, why); }

std::vector<Value> parse_list(std::string_view s) {
  std::vector<Value> out;
  if (s.empty()) return out;
  for (auto f : text::split(s, ',')) {
    auto v = text::parse_u64(f);
    if (!v) corrupt("bad number '" + std::string(f) + "'");
    out.push_back(*v);
  }
  return out;
}

}  // namespace

CacheLoadResult CacheLoader::parse(std::string_view text, std::size_t capacity) {
  CacheLoadResult result{PolicyCache(capacity), std::nullopt};
  if (text::trim(text).empty()) return result;
  try {
    auto nl = text.find('\n');
    if (nl == std::string_view::npos) corrupt("missing header terminator");
    auto header = text::tokens(text.substr(0, nl));
    if (header.size() != 4 || header[0] != "EOSCACHE" || header[1] != "v1") corrupt("bad header");
    auto count = text::parse_u64(header[2]);
    auto crc = text::parse_u64(header[3]);
    if (!count || !crc) corrupt("bad header numbers");
    const std::string_view body = text.substr(nl + 1);
    if (crc32_of(body) != *crc) corrupt("checksum mismatch");

    struct Parsed {
      CacheEntry entry;
      std::uint64_t rank;
    };
    std::vector<Parsed> parsed;
    text::for_each_line(body, [&](std::size_t, std::string_view line) {
      if (line.empty()) corrupt("blank line in body");
      auto f = text::split(line, '|');
      if (f.size() != 7) corrupt("expected 7 fields per entry");
      for (auto& x : f) x = text::trim(x);
      Parsed p;
      p.entry.signature.subsystem = std::string(f[0]);
      if (p.entry.signature.subsystem.empty()) corrupt("empty subsystem");
      p.entry.signature.values = parse_list(f[1]);
      p.entry.signature.thresholds = parse_list(f[2]);
      if (p.entry.signature.values.size() != p.entry.signature.thresholds.size()) {
        corrupt("signature width mismatch");
      }
      if (!f[3].empty()) {
        for (auto kv : text::split(f[3], ';')) {
          auto eq = kv.find('=');
          if (eq == std::string_view::npos || eq == 0) corrupt("bad setting pair");
          auto v = text::parse_u64(kv.substr(eq + 1));
          if (!v) corrupt("bad setting value");
          p.entry.setting[std::string(kv.substr(0, eq))] = *v;
        }
      }
      if (f[4] == "1") {
        p.entry.complete = true;
      } else if (f[4] == "0") {
        p.entry.complete = false;
      } else {
        corrupt("bad completeness flag");
      }
      if (f[5] != "-") p.entry.resume_state = decode_search_state(f[5]);
      if (p.entry.complete == p.entry.resume_state.has_value()) corrupt("completeness and resume state disagree");
      auto rank = text::parse_u64(f[6]);
      if (!rank) corrupt("bad lru rank");
      p.rank = *rank;
      parsed.push_back(std::move(p));
    });
    if (parsed.size() != *count) corrupt("entry count mismatch");
    if (parsed.size() > capacity) corrupt("more entries than capacity");
    std::vector<bool> seen(parsed.size(), false);
    for (const auto& p : parsed) {
      if (p.rank >= parsed.size() || seen[p.rank]) corrupt("lru ranks are not a permutation");
      seen[p.rank] = true;
    }

    PolicyCache& cache = result.cache;
    for (auto& p : parsed) {
      CacheEntry e = std::move(p.entry);
      const auto width = e.signature.values.size();
      const std::string sub = e.signature.subsystem;
      if (auto w = cache.widths_.find(sub); w != cache.widths_.end() && w->second != width) {
        corrupt("inconsistent signature width for " + sub);
      }
      cache.widths_[sub] = width;
      e.id = cache.next_id_++;
      e.last_used = p.rank + 1;
      if (!cache.lists_.contains(sub)) cache.subsystem_order_.push_back(sub);
      cache.lists_[sub].push_back(std::move(e));
    }
    cache.clock_ = parsed.size();
  } catch (const Error& e) {
    result.cache = PolicyCache(capacity);
    result.warning = e.what();
  }
  return result;
}

CacheLoadResult parse_cache(std::string_view text, std::size_t capacity) {
  return CacheLoader::parse(text, capacity);
}

CacheLoadResult load_cache(const std::string& path, std::size_t capacity) {
  return parse_cache(text::read_file(path), capacity);
}

}  // namespace eos
