#include "eos/clock.hpp"

#include <thread>

namespace eos {

Timestamp WallClock::now() const {
  return std::chrono::duration_cast<Timestamp>(std::chrono::steady_clock::now() - epoch_);
}

void WallClock::sleep_for(Duration d) { std::this_thread::sleep_for(d); }

}  // namespace eos
