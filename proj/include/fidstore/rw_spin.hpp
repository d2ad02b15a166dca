#pragma once

#include <atomic>
#include <cstdint>
#include <thread>

namespace fidstore {

// Reader-writer spin lock for short critical sections on the store's hot
// path. Meets SharedLockable, so std::shared_lock and std::unique_lock apply.
class RwSpinLock {
 public:
  void lock() noexcept {
    std::uint32_t expected = 0;
    while (!state_.compare_exchange_weak(expected, kWriter, std::memory_order_acquire,
                                         std::memory_order_relaxed)) {
      expected = 0;
      std::this_thread::yield();
    }
  }
  bool try_lock() noexcept {
    std::uint32_t expected = 0;
    return state_.compare_exchange_strong(expected, kWriter, std::memory_order_acquire,
                                          std::memory_order_relaxed);
  }
  void unlock() noexcept { state_.store(0, std::memory_order_release); }

  void lock_shared() noexcept {
    while (!try_lock_shared()) std::this_thread::yield();
  }
  bool try_lock_shared() noexcept {
    if (state_.fetch_add(1, std::memory_order_acquire) & kWriter) {
      state_.fetch_sub(1, std::memory_order_relaxed);
      return false;
    }
    return true;
  }
  void unlock_shared() noexcept { state_.fetch_sub(1, std::memory_order_release); }

 private:
  static constexpr std::uint32_t kWriter = 1u << 31;
  std::atomic<std::uint32_t> state_{0};
};

}  // namespace fidstore
