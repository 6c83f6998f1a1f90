#include "timelyfl/event_queue.h"

#include <cmath>
#include <string>

#include "timelyfl/errors.h"

namespace timelyfl {

std::uint64_t EventQueue::push(double time, EventKind kind, int client_id, std::size_t task) {
  if (!std::isfinite(time)) throw InvariantError("event scheduled at non-finite time");
  const std::uint64_t seq = next_sequence_++;
  heap_.push(SimEvent{time, seq, kind, client_id, task});
  return seq;
}

SimEvent EventQueue::pop() {
  if (heap_.empty()) throw InvariantError("pop from empty event queue");
  SimEvent e = heap_.top();
  heap_.pop();
  return e;
}

void SimClock::advance_to(double t) {
  if (t < now_) {
    throw InvariantError("clock moved backward from " + std::to_string(now_) + " to " +
                         std::to_string(t));
  }
  now_ = t;
}

}  // namespace timelyfl
