#include "timelyfl/fedbuff.h"

#include <cmath>

#include "timelyfl/errors.h"

namespace timelyfl {

double staleness_scale(std::uint64_t staleness) {
  return 1.0 / std::sqrt(1.0 + static_cast<double>(staleness));
}

AdmitResult fedbuff_admit(BuffServerState& state, ClientUpdate update,
                          std::uint64_t current_version) {
  if (state.aggregation_goal == 0) throw StructuralError("aggregation goal must be >= 1");
  if (update.origin_version > current_version) {
    throw InvariantError("update from the future: origin " +
                         std::to_string(update.origin_version) + " > current " +
                         std::to_string(current_version));
  }
  const std::uint64_t staleness = current_version - update.origin_version;
  if (staleness > state.staleness_cap) return AdmitResult::kDiscarded;
  const double scale = staleness_scale(staleness);
  if (scale != 1.0) {
    for (auto& [li, d] : update.layer_deltas) {
      for (double& v : d.weights.values()) v *= scale;
      for (double& v : d.biases) v *= scale;
    }
  }
  state.buffer.push_back(std::move(update));
  return state.buffer.size() >= state.aggregation_goal ? AdmitResult::kAggregateNow
                                                       : AdmitResult::kBuffered;
}

}  // namespace timelyfl
