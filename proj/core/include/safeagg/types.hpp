#pragma once

#include <chrono>
#include <cstdint>

#include "safeagg/errors.hpp"

namespace safeagg {

using NodeId = int;
using GroupId = int;

// All protocol timing uses nanosecond durations measured from a Clock's epoch.
using Duration = std::chrono::nanoseconds;
using TimePoint = std::chrono::nanoseconds;

inline Duration secs(double s) {
  return std::chrono::duration_cast<Duration>(std::chrono::duration<double>(s));
}

inline double to_secs(Duration d) {
  return std::chrono::duration<double>(d).count();
}

// Shared long-poll knobs. A blocking endpoint re-checks its condition every
// yield_time for up to poll_time before reporting "not yet"; callers that
// still see nothing keep re-polling until their own deadline expires. The
// controller declares an initiator dead once its round record is older than
// aggregation_timeout, so polls must give up at least once within that
// window or a hung round could never be taken over.
struct PollConfig {
  double poll_time_s = 30.0;
  double yield_time_s = 0.1;
  double aggregation_timeout_s = 60.0;

  Duration poll_time() const { return secs(poll_time_s); }
  Duration yield_time() const { return secs(yield_time_s); }
  Duration aggregation_timeout() const { return secs(aggregation_timeout_s); }

  void validate() const {
    if (poll_time_s <= 0 || yield_time_s <= 0 || aggregation_timeout_s <= 0) {
      throw ProtocolError("poll config: all intervals must be positive");
    }
    if (yield_time_s > poll_time_s) {
      throw ProtocolError("poll config: yield_time must not exceed poll_time");
    }
    if (poll_time_s >= aggregation_timeout_s) {
      throw ProtocolError(
          "poll config: poll_time must be shorter than aggregation_timeout, "
          "or a node blocked in a poll could never notice a dead initiator");
    }
  }
};

}  // namespace safeagg
