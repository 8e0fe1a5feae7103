#pragma once

// Modeled memory accounting and cooperative cancellation, the two handles an
// invocation passes down into task code.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <string>
#include <thread>

#include "smr/error.hpp"

namespace smr {

inline constexpr double kBytesPerMb = 1024.0 * 1024.0;

/// Tracks bytes a task declares it holds. The peak never decreases. When a
/// limit is set, an allocation that would exceed it records the new peak,
/// leaves current unchanged, and throws MemoryExceeded.
///
/// Owned by one invocation; counters are atomic only so the runtime can read
/// the peak of a handler it has abandoned after a timeout.
class Meter {
 public:
  Meter() = default;
  explicit Meter(std::uint64_t limit_bytes) : limit_(limit_bytes) {}

  Meter(const Meter&) = delete;
  Meter& operator=(const Meter&) = delete;

  void alloc(std::uint64_t bytes) {
    auto cur = current_.fetch_add(bytes, std::memory_order_relaxed) + bytes;
    auto peak = peak_.load(std::memory_order_relaxed);
    while (cur > peak &&
           !peak_.compare_exchange_weak(peak, cur, std::memory_order_relaxed)) {
    }
    if (limit_ != 0 && cur > limit_) {
      current_.fetch_sub(bytes, std::memory_order_relaxed);
      throw Error(Errc::MemoryExceeded,
                  std::to_string(cur) + " bytes > limit " + std::to_string(limit_));
    }
  }

  void free(std::uint64_t bytes) {
    auto cur = current_.load(std::memory_order_relaxed);
    if (bytes > cur)
      throw Error(Errc::UnderflowFree, "free " + std::to_string(bytes) +
                                           " with " + std::to_string(cur) +
                                           " allocated");
    current_.fetch_sub(bytes, std::memory_order_relaxed);
  }

  std::uint64_t current_bytes() const { return current_.load(); }
  std::uint64_t peak_bytes() const { return peak_.load(); }
  std::uint64_t limit_bytes() const { return limit_; }
  double peak_mb() const { return static_cast<double>(peak_bytes()) / kBytesPerMb; }

 private:
  std::atomic<std::uint64_t> current_{0};
  std::atomic<std::uint64_t> peak_{0};
  std::uint64_t limit_ = 0;  // 0 = unlimited
};

/// RAII allocation against a meter; frees on scope exit.
class MeteredBytes {
 public:
  MeteredBytes(Meter& meter, std::uint64_t bytes) : meter_(&meter), bytes_(bytes) {
    meter_->alloc(bytes_);
  }
  MeteredBytes(const MeteredBytes&) = delete;
  MeteredBytes& operator=(const MeteredBytes&) = delete;
  MeteredBytes(MeteredBytes&& o) noexcept : meter_(o.meter_), bytes_(o.bytes_) {
    o.meter_ = nullptr;
  }
  ~MeteredBytes() { reset(); }

  /// Frees the bytes now instead of at scope exit.
  void reset() {
    if (meter_) meter_->free(bytes_);
    meter_ = nullptr;
  }

 private:
  Meter* meter_;
  std::uint64_t bytes_;
};

class CancelToken {
 public:
  void cancel() { flag_.store(true, std::memory_order_release); }
  bool cancelled() const { return flag_.load(std::memory_order_acquire); }

  /// Throws Cancelled once cancel() has been called.
  void checkpoint() const {
    if (cancelled()) throw Error(Errc::Cancelled, "invocation cancelled");
  }

  /// Sleeps up to `d`, waking early on cancellation. Returns false if cancelled.
  bool sleep_for(std::chrono::nanoseconds d) const {
    using clock = std::chrono::steady_clock;
    auto until = clock::now() + d;
    while (!cancelled()) {
      auto now = clock::now();
      if (now >= until) return true;
      std::this_thread::sleep_for(
          std::min<std::chrono::nanoseconds>(until - now, std::chrono::milliseconds(2)));
    }
    return false;
  }

 private:
  std::atomic<bool> flag_{false};
};

}  // namespace smr
