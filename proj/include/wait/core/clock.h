#pragma once

#include <atomic>
#include <cstdint>
#include <functional>

namespace waitsec {

// UNIX seconds source. Injected everywhere a decision depends on time.
using Clock = std::function<std::int64_t()>;

Clock system_clock();

// Manually driven clock for time-travel tests and scenarios.
class VirtualClock {
 public:
  explicit VirtualClock(std::int64_t start = 0) : now_(start) {}

  std::int64_t now() const { return now_.load(); }
  void set(std::int64_t t) { now_.store(t); }
  void advance(std::int64_t seconds) { now_.fetch_add(seconds); }

  // The returned clock borrows this object.
  Clock as_clock() const {
    return [this] { return now(); };
  }

 private:
  std::atomic<std::int64_t> now_;
};

}  // namespace waitsec
