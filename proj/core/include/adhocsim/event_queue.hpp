#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <queue>
#include <unordered_map>
#include <vector>

#include "adhocsim/contract.hpp"
#include "adhocsim/types.hpp"

namespace adhocsim {

// Deterministic discrete-event queue.  Events fire in (fire_at, seq) order
// where seq is the insertion sequence number, so equal-time events dispatch
// in scheduling order.  Scheduling into the past is a contract violation.
class EventQueue {
 public:
  using Handle = std::uint64_t;  // 0 is never a valid handle

  SimTime now() const { return now_; }

  Handle schedule(SimTime fire_at, std::function<void()> fn);

  // True iff the event was still pending (not fired, not cancelled).
  bool cancel(Handle h);

  // Dispatches every event with fire_at <= t_end (boundary inclusive),
  // including events scheduled while running, then advances the clock to
  // t_end.  Returns the number of events dispatched.
  std::size_t run_until(SimTime t_end);

  // Dispatches the single earliest pending event.  Returns false when the
  // queue holds no live events.
  bool step();

  bool has_pending() const { return !live_.empty(); }

  // Fire time of the earliest live event; queue must not be empty.
  SimTime next_time();

  // Advances the clock without dispatching (t >= now).
  void advance_to(SimTime t);

 private:
  struct Key {
    SimTime at;
    Handle seq;
  };
  struct Later {
    bool operator()(const Key& a, const Key& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  // Pops lazily-cancelled heap tops; afterwards the top (if any) is live.
  void drop_cancelled();

  std::priority_queue<Key, std::vector<Key>, Later> heap_;
  // Keyed lookups only; never iterated, so unordered layout cannot perturb
  // event order.
  std::unordered_map<Handle, std::function<void()>> live_;
  SimTime now_ = 0.0;
  Handle next_seq_ = 1;
};

}  // namespace adhocsim
