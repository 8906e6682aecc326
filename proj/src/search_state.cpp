#include "eos/search_state.hpp"

#include <sstream>

#include "eos/error.hpp"
#include "text_util.hpp"

namespace eos {

std::string_view to_string(SearchPhase phase) {
  switch (phase) {
    case SearchPhase::kProbingBaseline: return "baseline";
    case SearchPhase::kSweeping: return "sweeping";
    case SearchPhase::kDone: return "done";
  }
  return "?";
}

std::string encode_search_state(const SearchState& s) {
  std::ostringstream out;
  out << to_string(s.phase) << '/' << s.cursor << '/' << s.candidate_cursor << '/' << s.best_score << '/';
  for (std::size_t i = 0; i < s.ordering.size(); ++i) out << (i ? "," : "") << s.ordering[i];
  out << '/';
  bool first = true;
  for (const auto& [name, value] : s.best_setting) {
    out << (first ? "" : ",") << name << ':' << value;
    first = false;
  }
  return out.str();
}

namespace {

[[noreturn]] void corrupt(const std::string& why) {
  throw Error(ErrorCode::kCorruptCacheFile, "bad resume state: " + why);
}

std::uint64_t number(std::string_view s) {
  auto v = text::parse_u64(s);
  if (!v) corrupt("expected number, got '" + std::string(s) + "'");
  return *v;
}

}  // namespace

SearchState decode_search_state(std::string_view blob) {
  auto parts = text::split(blob, '/');
  if (parts.size() != 6) corrupt("expected 6 fields");
  SearchState s;
  if (parts[0] == "baseline") {
    s.phase = SearchPhase::kProbingBaseline;
  } else if (parts[0] == "sweeping") {
    s.phase = SearchPhase::kSweeping;
  } else if (parts[0] == "done") {
    s.phase = SearchPhase::kDone;
  } else {
    corrupt("unknown phase");
  }
  s.cursor = number(parts[1]);
  s.candidate_cursor = number(parts[2]);
  s.best_score = number(parts[3]);
  if (!parts[4].empty()) {
    for (auto name : text::split(parts[4], ',')) {
      if (name.empty()) corrupt("empty parameter name");
      s.ordering.emplace_back(name);
    }
  }
  if (!parts[5].empty()) {
    for (auto kv : text::split(parts[5], ',')) {
      auto colon = kv.find(':');
      if (colon == std::string_view::npos || colon == 0) corrupt("bad setting pair");
      s.best_setting[std::string(kv.substr(0, colon))] = number(kv.substr(colon + 1));
    }
  }
  if (s.cursor > s.ordering.size()) corrupt("cursor past ordering");
  return s;
}

}  // namespace eos
