#pragma once

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <set>

#include "safeagg/types.hpp"

namespace safeagg {

// Time source used by every component that sleeps or stamps records. The
// protocol logic never touches std::chrono clocks directly, which lets tests
// and deterministic benchmark runs swap in a virtual clock.
class Clock {
 public:
  virtual ~Clock() = default;

  // Time elapsed since this clock's epoch.
  virtual TimePoint now() = 0;

  // Blocks the calling actor for (at least) d.
  virtual void sleep_for(Duration d) = 0;

  void sleep_until(TimePoint t) {
    TimePoint n = now();
    if (t > n) sleep_for(t - n);
  }
};

// Wall-clock implementation; epoch is the moment of construction.
class SystemClock : public Clock {
 public:
  SystemClock();
  TimePoint now() override;
  void sleep_for(Duration d) override;

 private:
  std::chrono::steady_clock::time_point epoch_;
};

// Deterministic discrete-event clock. A fixed population of actor threads is
// announced up front with reserve_actors(); time only advances when every
// registered actor is parked in sleep_for(), and then it jumps straight to
// the earliest pending wake-up. Runs that are dominated by polling intervals
// finish in milliseconds of real time while observing identical timestamps
// on every execution.
class VirtualClock : public Clock {
 public:
  TimePoint now() override;
  void sleep_for(Duration d) override;

  // Declare n more actors before spawning their threads, so the clock cannot
  // advance in the window between thread creation and the first sleep.
  void reserve_actors(int n);

  // An actor is done for good; remaining sleepers may now advance time.
  void release_actor();

 private:
  void advance_locked();

  std::mutex mu_;
  std::condition_variable cv_;
  TimePoint now_{0};
  int registered_ = 0;
  int sleeping_ = 0;
  std::multiset<TimePoint> wake_times_;
};

// Pairs with VirtualClock::reserve_actors: constructed at the top of an actor
// thread, releases the reservation when the thread's work ends. A null clock
// makes it a no-op so the same actor code runs under a SystemClock.
class ScopedActor {
 public:
  explicit ScopedActor(VirtualClock* clock) : clock_(clock) {}
  ~ScopedActor() {
    if (clock_) clock_->release_actor();
  }
  ScopedActor(const ScopedActor&) = delete;
  ScopedActor& operator=(const ScopedActor&) = delete;

 private:
  VirtualClock* clock_;
};

}  // namespace safeagg
