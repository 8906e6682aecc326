#include "eos/report.hpp"

#include <sstream>

namespace eos {

std::string setting_to_string(const ParameterSetting& setting) {
  std::string out;
  for (const auto& [name, value] : setting) {
    if (!out.empty()) out += ' ';
    out += name + "=" + std::to_string(value);
  }
  return out;
}

std::string reports_to_csv(const std::vector<SessionReport>& reports) {
  std::ostringstream out;
  out << "cycle,step,param,value,score,cache_event\n";
  for (const auto& r : reports) {
    if (r.error) {
      out << r.cycle << ",-,-,-,-,error\n";
      continue;
    }
    const auto event = to_string(r.cache_event);
    if (r.cache_event == CacheEvent::kNone) {
      out << r.cycle << ",-,-,-,-,none\n";
      continue;
    }
    std::size_t step = 0;
    for (const auto& s : r.steps) {
      out << r.cycle << ',' << ++step << ',' << s.param << ',';
      if (s.param == kBaselineStep) {
        out << '-';
      } else {
        out << s.value;
      }
      out << ',' << s.score << ',' << event << '\n';
    }
    const char* tag = r.complete ? "final" : "partial";
    for (const auto& [name, value] : r.chosen) {
      out << r.cycle << ',' << tag << ',' << name << ',' << value << ",-," << event << '\n';
    }
  }
  return out.str();
}

std::string reports_to_text(const std::vector<SessionReport>& reports) {
  std::ostringstream out;
  for (const auto& r : reports) {
    out << "cycle " << r.cycle << ": ";
    if (r.error) {
      out << "error: " << *r.error << '\n';
      continue;
    }
    if (r.cache_event == CacheEvent::kNone) {
      out << "no bottleneck\n";
      continue;
    }
    out << r.subsystem << ", cache " << to_string(r.cache_event) << ", " << r.measurements()
        << " measurements, " << (r.complete ? "done" : "interrupted") << '\n';
    std::size_t step = 0;
    for (const auto& s : r.steps) {
      out << "  step " << ++step << " t=" << std::chrono::duration<double>(s.at).count() << "s ";
      if (s.param == kBaselineStep) {
        out << "baseline";
      } else {
        out << s.param << '=' << s.value;
      }
      out << " score=" << s.score << '\n';
    }
    out << "  " << (r.complete ? "chosen" : "best so far") << ": " << setting_to_string(r.chosen) << '\n';
  }
  return out.str();
}

}  // namespace eos
