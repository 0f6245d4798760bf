#include "adhocsim/event_queue.hpp"

#include <string>
#include <utility>

namespace adhocsim {

EventQueue::Handle EventQueue::schedule(SimTime fire_at, std::function<void()> fn) {
  if (fire_at < now_) {
    contract_fail("schedule into the past: fire_at=" + std::to_string(fire_at) +
                  " now=" + std::to_string(now_));
  }
  Handle h = next_seq_++;
  heap_.push(Key{fire_at, h});
  live_.emplace(h, std::move(fn));
  return h;
}

bool EventQueue::cancel(Handle h) { return live_.erase(h) != 0; }

void EventQueue::drop_cancelled() {
  while (!heap_.empty() && live_.find(heap_.top().seq) == live_.end()) heap_.pop();
}

std::size_t EventQueue::run_until(SimTime t_end) {
  contract_check(t_end >= now_, "run_until into the past");
  std::size_t dispatched = 0;
  for (;;) {
    drop_cancelled();
    if (heap_.empty() || heap_.top().at > t_end) break;
    Key k = heap_.top();
    heap_.pop();
    auto it = live_.find(k.seq);
    std::function<void()> fn = std::move(it->second);
    live_.erase(it);
    now_ = k.at;
    fn();
    ++dispatched;
  }
  now_ = t_end;
  return dispatched;
}

bool EventQueue::step() {
  drop_cancelled();
  if (heap_.empty()) return false;
  Key k = heap_.top();
  heap_.pop();
  auto it = live_.find(k.seq);
  std::function<void()> fn = std::move(it->second);
  live_.erase(it);
  now_ = k.at;
  fn();
  return true;
}

SimTime EventQueue::next_time() {
  drop_cancelled();
  contract_check(!heap_.empty(), "next_time on an empty queue");
  return heap_.top().at;
}

void EventQueue::advance_to(SimTime t) {
  contract_check(t >= now_, "advance_to into the past");
  now_ = t;
}

}  // namespace adhocsim
