#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "eos/param_spec.hpp"

namespace eos {

enum class SearchPhase { kProbingBaseline, kSweeping, kDone };

std::string_view to_string(SearchPhase phase);

// Everything needed to continue an interrupted orthogonal search.
//
// `cursor` indexes `ordering`; `candidate_cursor` indexes the candidate
// ladder of ordering[cursor] and names the next value to measure.
struct SearchState {
  std::vector<std::string> ordering;
  std::size_t cursor = 0;
  std::size_t candidate_cursor = 0;
  ParameterSetting best_setting;
  Value best_score = 0;
  SearchPhase phase = SearchPhase::kProbingBaseline;

  friend bool operator==(const SearchState&, const SearchState&) = default;
};

// Compact single-line encoding used inside cache files. Never contains '|'
// or a newline.
//   <phase>/<cursor>/<candidate_cursor>/<best_score>/<p1,p2,..>/<name:value,..>
std::string encode_search_state(const SearchState& state);
SearchState decode_search_state(std::string_view blob);  // throws kCorruptCacheFile

}  // namespace eos
