#include "eos/mixed_lock.hpp"

#include <cassert>
#include <thread>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif

namespace eos::lock {

static_assert(MixedLockLayout::state_size() <= kCacheLine, "protocol words must share one cache line");
static_assert(MixedLockLayout::state_offset() - MixedLockLayout::mode_offset() >= kCacheLine,
              "mode must not share a cache line with the protocol words");

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::kTtas: return "ttas";
    case Protocol::kBackoffTicket: return "ticket";
    case Protocol::kMcs: return "mcs";
  }
  return "?";
}

std::optional<Protocol> parse_protocol(std::string_view s) {
  for (auto p : kAllProtocols) {
    if (s == to_string(p)) return p;
  }
  return std::nullopt;
}

Protocol protocol_from_tuner(std::uint64_t v) {
  return v <= 2 ? static_cast<Protocol>(v) : Protocol::kTtas;
}

LockTuning& global_lock_tuning() {
  static LockTuning tuning;
  return tuning;
}

void cpu_relax() {
#if defined(__x86_64__) || defined(__i386__)
  _mm_pause();
#elif defined(__aarch64__)
  asm volatile("yield" ::: "memory");
#else
  std::atomic_signal_fence(std::memory_order_seq_cst);
#endif
}

namespace {

constexpr unsigned kPausesPerUnit = 4;
// Spinning past this many polls yields the CPU, so a preempted holder or
// successor can run when threads outnumber cores.
constexpr unsigned kPollsBeforeYield = 128;

class SpinWait {
 public:
  void once() {
    if (++polls_ < kPollsBeforeYield) {
      cpu_relax();
    } else {
      polls_ = 0;
      std::this_thread::yield();
    }
  }

 private:
  unsigned polls_ = 0;
};

}  // namespace

void spin_units(std::uint64_t units) {
  for (std::uint64_t i = 0; i < units * kPausesPerUnit; ++i) cpu_relax();
}

MixedLock::MixedLock(LockTuning* tuning) : tuning_(tuning) { init(); }

void MixedLock::init() {
  state_.ttas_word.store(0, std::memory_order_relaxed);
  state_.next_ticket.store(0, std::memory_order_relaxed);
  state_.now_serving.store(0, std::memory_order_relaxed);
  state_.mcs_tail.store(nullptr, std::memory_order_relaxed);
  state_.ttas_valid.store(true, std::memory_order_relaxed);
  state_.ticket_valid.store(false, std::memory_order_relaxed);
  state_.mcs_valid.store(false, std::memory_order_relaxed);
  switches_.store(0, std::memory_order_relaxed);
  mode_.store(Protocol::kTtas, std::memory_order_release);
}

std::atomic<bool>& MixedLock::valid_flag(Protocol p) {
  switch (p) {
    case Protocol::kTtas: return state_.ttas_valid;
    case Protocol::kBackoffTicket: return state_.ticket_valid;
    case Protocol::kMcs: return state_.mcs_valid;
  }
  return state_.ttas_valid;
}

bool MixedLock::is_valid(Protocol p) const {
  return const_cast<MixedLock*>(this)->valid_flag(p).load(std::memory_order_acquire);
}

// Returns false when the lock word was never taken because TTAS became
// invalid while polling.
bool MixedLock::ttas_acquire() {
  SpinWait wait;
  for (;;) {
    if (state_.ttas_word.load(std::memory_order_relaxed) == 0 &&
        state_.ttas_word.exchange(1, std::memory_order_acquire) == 0) {
      return true;
    }
    if (!state_.ttas_valid.load(std::memory_order_acquire)) return false;
    wait.once();
  }
}

std::uint32_t MixedLock::ticket_acquire() {
  const std::uint32_t mine = state_.next_ticket.fetch_add(1, std::memory_order_relaxed);
  SpinWait wait;
  for (;;) {
    const std::uint32_t serving = state_.now_serving.load(std::memory_order_acquire);
    if (serving == mine) return mine;
    // Pause C x N before the next poll, N = outstanding requesters.
    const std::uint32_t waiting = state_.next_ticket.load(std::memory_order_relaxed) - serving;
    const std::uint64_t weight = tuning_->val_tuner.load(std::memory_order_relaxed);
    if (weight != 0) spin_units(weight * waiting);
    wait.once();
  }
}

void MixedLock::mcs_acquire(WaiterNode& node) {
  node.next.store(nullptr, std::memory_order_relaxed);
  node.locked.store(true, std::memory_order_relaxed);
  WaiterNode* pred = state_.mcs_tail.exchange(&node, std::memory_order_acq_rel);
  if (pred == nullptr) return;
  pred->next.store(&node, std::memory_order_release);
  SpinWait wait;
  while (node.locked.load(std::memory_order_acquire)) wait.once();
}

void MixedLock::mcs_release(WaiterNode& node) {
  WaiterNode* succ = node.next.load(std::memory_order_acquire);
  if (succ == nullptr) {
    WaiterNode* expected = &node;
    if (state_.mcs_tail.compare_exchange_strong(expected, nullptr, std::memory_order_release,
                                                std::memory_order_relaxed)) {
      return;
    }
    // A successor swapped the tail but has not linked itself yet.
    SpinWait wait;
    while ((succ = node.next.load(std::memory_order_acquire)) == nullptr) wait.once();
  }
  succ->locked.store(false, std::memory_order_release);
}

void MixedLock::acquire_raw(Protocol p, WaiterNode& node) {
  switch (p) {
    case Protocol::kTtas: {
      SpinWait wait;
      for (;;) {
        if (state_.ttas_word.load(std::memory_order_relaxed) == 0 &&
            state_.ttas_word.exchange(1, std::memory_order_acquire) == 0) {
          return;
        }
        wait.once();
      }
    }
    case Protocol::kBackoffTicket:
      (void)ticket_acquire();
      return;
    case Protocol::kMcs:
      mcs_acquire(node);
      return;
  }
}

void MixedLock::release_raw(Protocol p, WaiterNode& node) {
  switch (p) {
    case Protocol::kTtas:
      state_.ttas_word.store(0, std::memory_order_release);
      return;
    case Protocol::kBackoffTicket:
      // Only the holder writes now_serving.
      state_.now_serving.store(state_.now_serving.load(std::memory_order_relaxed) + 1,
                               std::memory_order_release);
      return;
    case Protocol::kMcs:
      mcs_release(node);
      return;
  }
}

bool MixedLock::acquire_valid(Protocol p, WaiterNode& node, std::uint32_t& ticket) {
  switch (p) {
    case Protocol::kTtas:
      if (!ttas_acquire()) return false;
      break;
    case Protocol::kBackoffTicket:
      ticket = ticket_acquire();
      break;
    case Protocol::kMcs:
      mcs_acquire(node);
      break;
  }
  // Validity only changes while the protocol is held, so this read is stable
  // for as long as we hold it.
  if (valid_flag(p).load(std::memory_order_acquire)) return true;
  release_raw(p, node);
  return false;
}

ReleaseMode MixedLock::acquire(WaiterNode& node) {
  for (;;) {
    const Protocol p = mode_.load(std::memory_order_acquire);
    std::uint32_t ticket = 0;
    if (!acquire_valid(p, node, ticket)) continue;
    const Protocol desired = protocol_from_tuner(tuning_->method_tuner.load(std::memory_order_relaxed));
    return ReleaseMode{p, desired, ticket};
  }
}

std::optional<ReleaseMode> MixedLock::try_acquire(WaiterNode& node) {
  const Protocol p = mode_.load(std::memory_order_acquire);
  std::uint32_t ticket = 0;
  switch (p) {
    case Protocol::kTtas:
      if (state_.ttas_word.load(std::memory_order_relaxed) != 0 ||
          state_.ttas_word.exchange(1, std::memory_order_acquire) != 0) {
        return std::nullopt;
      }
      break;
    case Protocol::kBackoffTicket: {
      std::uint32_t serving = state_.now_serving.load(std::memory_order_acquire);
      std::uint32_t next = serving;
      if (!state_.next_ticket.compare_exchange_strong(next, serving + 1, std::memory_order_acquire,
                                                      std::memory_order_relaxed)) {
        return std::nullopt;
      }
      ticket = serving;
      break;
    }
    case Protocol::kMcs: {
      node.next.store(nullptr, std::memory_order_relaxed);
      node.locked.store(false, std::memory_order_relaxed);
      WaiterNode* expected = nullptr;
      if (!state_.mcs_tail.compare_exchange_strong(expected, &node, std::memory_order_acquire,
                                                   std::memory_order_relaxed)) {
        return std::nullopt;
      }
      break;
    }
  }
  if (!valid_flag(p).load(std::memory_order_acquire)) {
    release_raw(p, node);
    return std::nullopt;
  }
  const Protocol desired = protocol_from_tuner(tuning_->method_tuner.load(std::memory_order_relaxed));
  return ReleaseMode{p, desired, ticket};
}

void MixedLock::release(WaiterNode& node, ReleaseMode rm) {
  assert(mode_.load(std::memory_order_relaxed) == rm.held);
  assert(valid_flag(rm.held).load(std::memory_order_relaxed));
  if (!rm.is_switch()) {
    release_raw(rm.held, node);
    return;
  }
  WaiterNode target_node;
  acquire_raw(rm.target, target_node);
  mode_.store(rm.target, std::memory_order_release);
  valid_flag(rm.held).store(false, std::memory_order_release);
  valid_flag(rm.target).store(true, std::memory_order_release);
  switches_.fetch_add(1, std::memory_order_relaxed);
  // Waiters stranded on the old protocol now see it invalid and move over.
  release_raw(rm.held, node);
  release_raw(rm.target, target_node);
}

}  // namespace eos::lock
