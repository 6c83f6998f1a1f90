#ifndef TIMELYFL_EVENT_QUEUE_H_
#define TIMELYFL_EVENT_QUEUE_H_

#include <cstdint>
#include <queue>
#include <vector>

namespace timelyfl {

enum class EventKind { kProbeReport, kUpdateArrival, kAggregationDeadline, kClientSpawn };

struct SimEvent {
  double time = 0.0;
  std::uint64_t sequence = 0;
  EventKind kind = EventKind::kClientSpawn;
  int client_id = -1;
  std::size_t task = 0;  // index into the caller's task table
};

// Min-queue ordered by (time, sequence). Sequence numbers are assigned on
// push and never reused.
class EventQueue {
 public:
  std::uint64_t push(double time, EventKind kind, int client_id = -1, std::size_t task = 0);
  SimEvent pop();
  const SimEvent& top() const { return heap_.top(); }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.sequence > b.sequence;
    }
  };
  std::priority_queue<SimEvent, std::vector<SimEvent>, Later> heap_;
  std::uint64_t next_sequence_ = 0;
};

class SimClock {
 public:
  double now() const { return now_; }
  // Throws InvariantError if t < now().
  void advance_to(double t);

 private:
  double now_ = 0.0;
};

}  // namespace timelyfl

#endif  // TIMELYFL_EVENT_QUEUE_H_
