#pragma once

#include <string>
#include <vector>

#include "eos/search_engine.hpp"

namespace eos {

// CSV with header `cycle,step,param,value,score,cache_event`.
//
// Per report: one row per measurement (step 1..n), then one `final` row per
// chosen parameter (`partial` when the search was interrupted). A cycle with
// no bottleneck yields a single `-` row with event `none`; a failed cycle a
// row with event `error`.
std::string reports_to_csv(const std::vector<SessionReport>& reports);

// Same data as the CSV, for people.
std::string reports_to_text(const std::vector<SessionReport>& reports);

std::string setting_to_string(const ParameterSetting& setting);

}  // namespace eos
