#include "safeagg/clock.hpp"

#include <thread>

namespace safeagg {

SystemClock::SystemClock() : epoch_(std::chrono::steady_clock::now()) {}

TimePoint SystemClock::now() {
  return std::chrono::duration_cast<Duration>(std::chrono::steady_clock::now() -
                                              epoch_);
}

void SystemClock::sleep_for(Duration d) {
  if (d > Duration::zero()) std::this_thread::sleep_for(d);
}

TimePoint VirtualClock::now() {
  std::lock_guard lk(mu_);
  return now_;
}

void VirtualClock::reserve_actors(int n) {
  std::lock_guard lk(mu_);
  registered_ += n;
}

void VirtualClock::release_actor() {
  std::lock_guard lk(mu_);
  --registered_;
  // The departing actor may have been the one everybody was waiting on.
  if (sleeping_ >= registered_) advance_locked();
}

void VirtualClock::sleep_for(Duration d) {
  if (d <= Duration::zero()) return;
  std::unique_lock lk(mu_);
  const TimePoint wake = now_ + d;
  auto it = wake_times_.insert(wake);
  ++sleeping_;
  // ">=" rather than "==" so that threads which never reserved a slot (plain
  // unit tests driving the clock directly) cannot park it forever.
  if (sleeping_ >= registered_) advance_locked();
  cv_.wait(lk, [&] { return now_ >= wake; });
  wake_times_.erase(it);
  --sleeping_;
}

// Requires mu_. Every registered actor is asleep, so nothing can observe an
// intermediate instant: jump to the earliest wake-up and release its sleepers.
void VirtualClock::advance_locked() {
  if (wake_times_.empty()) return;
  if (*wake_times_.begin() > now_) now_ = *wake_times_.begin();
  cv_.notify_all();
}

}  // namespace safeagg
