#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace eos::lock {

inline constexpr std::size_t kCacheLine = 64;

enum class Protocol : std::uint8_t { kTtas = 0, kBackoffTicket = 1, kMcs = 2 };

inline constexpr Protocol kAllProtocols[] = {Protocol::kTtas, Protocol::kBackoffTicket, Protocol::kMcs};

std::string_view to_string(Protocol p);
std::optional<Protocol> parse_protocol(std::string_view s);

// Out-of-range tuner values fall back to TTAS.
Protocol protocol_from_tuner(std::uint64_t v);

// Desired protocol and back-off polling weight C. Shared by every lock that
// points at it.
struct LockTuning {
  std::atomic<std::uint64_t> method_tuner{0};
  std::atomic<std::uint64_t> val_tuner{0};
};

// Default tuning for locks constructed without their own.
LockTuning& global_lock_tuning();

// Per-acquire MCS queue node. Must not be shared between in-flight acquires.
struct alignas(kCacheLine) WaiterNode {
  std::atomic<WaiterNode*> next{nullptr};
  std::atomic<bool> locked{false};
};

// Returned by acquire and handed back to release. `target != held` asks the
// release to switch protocols.
struct ReleaseMode {
  Protocol held = Protocol::kTtas;
  Protocol target = Protocol::kTtas;
  std::uint32_t ticket = 0;  // ticket number when held == kBackoffTicket

  bool is_switch() const { return held != target; }
  static ReleaseMode plain(Protocol p) { return {p, p, 0}; }
};

// Adaptive spin lock with three interchangeable protocols.
//
// Exactly one protocol is valid at a time and `mode` names it. A requester
// acquires the protocol named by `mode`, then checks its validity flag; if
// the protocol was invalidated meanwhile it passes the protocol on and
// retries through the current mode. TTAS waiters also watch the flag while
// polling and leave without acquiring.
//
// Switching happens in release: the holder acquires the target protocol
// (free, since everyone entering it leaves immediately while it is invalid),
// publishes the new mode, invalidates the old protocol, validates the target
// and releases both. Validity flags only change while their protocol is held
// by the switcher, which gives mutual exclusion across switches.
class MixedLock {
 public:
  explicit MixedLock(LockTuning* tuning = &global_lock_tuning());
  MixedLock(const MixedLock&) = delete;
  MixedLock& operator=(const MixedLock&) = delete;

  // Resets to TTAS mode, TTAS valid, others invalid, free. Only before the
  // lock is shared.
  void init();

  ReleaseMode acquire(WaiterNode& node);
  // nullopt when the lock is busy.
  std::optional<ReleaseMode> try_acquire(WaiterNode& node);
  void release(WaiterNode& node, ReleaseMode mode);

  Protocol mode() const { return mode_.load(std::memory_order_acquire); }
  bool is_valid(Protocol p) const;
  LockTuning& tuning() const { return *tuning_; }

  // Completed protocol switches since init.
  std::uint64_t switch_count() const { return switches_.load(std::memory_order_relaxed); }

 private:
  bool acquire_valid(Protocol p, WaiterNode& node, std::uint32_t& ticket);
  void acquire_raw(Protocol p, WaiterNode& node);
  void release_raw(Protocol p, WaiterNode& node);
  std::atomic<bool>& valid_flag(Protocol p);

  bool ttas_acquire();
  std::uint32_t ticket_acquire();
  void mcs_acquire(WaiterNode& node);
  void mcs_release(WaiterNode& node);

  // Mostly read, written only on a switch; kept on its own line.
  alignas(kCacheLine) std::atomic<Protocol> mode_{Protocol::kTtas};

  struct alignas(kCacheLine) ProtocolState {
    std::atomic<std::uint32_t> ttas_word{0};
    std::atomic<std::uint32_t> next_ticket{0};
    std::atomic<std::uint32_t> now_serving{0};
    std::atomic<WaiterNode*> mcs_tail{nullptr};
    std::atomic<bool> ttas_valid{true};
    std::atomic<bool> ticket_valid{false};
    std::atomic<bool> mcs_valid{false};
  };
  ProtocolState state_;

  alignas(kCacheLine) LockTuning* tuning_;
  std::atomic<std::uint64_t> switches_{0};

  friend struct MixedLockLayout;
};

// Compile-time layout facts for tests.
struct MixedLockLayout {
  static constexpr std::size_t mode_offset() { return offsetof(MixedLock, mode_); }
  static constexpr std::size_t state_offset() { return offsetof(MixedLock, state_); }
  static constexpr std::size_t state_size() { return sizeof(MixedLock::ProtocolState); }
};

// Busy-wait helpers.
void cpu_relax();
// `units` spin units of a few pause instructions each.
void spin_units(std::uint64_t units);

}  // namespace eos::lock
