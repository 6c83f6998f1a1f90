#ifndef TIMELYFL_FEDBUFF_H_
#define TIMELYFL_FEDBUFF_H_

#include <cstdint>
#include <vector>

#include "timelyfl/model.h"

namespace timelyfl {

// Server-side buffer of the buffered-asynchronous baseline.
struct BuffServerState {
  std::vector<ClientUpdate> buffer;
  std::size_t aggregation_goal = 1;  // K
  std::uint64_t staleness_cap = 10;
};

enum class AdmitResult { kBuffered, kDiscarded, kAggregateNow };

// 1 / sqrt(1 + staleness).
double staleness_scale(std::uint64_t staleness);

// Discards updates staler than the cap; otherwise scales the deltas by
// staleness_scale and buffers them. kAggregateNow means the buffer holds K
// updates; the caller aggregates and clears it.
AdmitResult fedbuff_admit(BuffServerState& state, ClientUpdate update,
                          std::uint64_t current_version);

}  // namespace timelyfl

#endif  // TIMELYFL_FEDBUFF_H_
