#ifndef TIMELYFL_AGGREGATION_H_
#define TIMELYFL_AGGREGATION_H_

#include <cstdint>
#include <span>
#include <string>

#include "timelyfl/model.h"

namespace timelyfl {

enum class AggregatorKind { kFedAvg, kFedOptAdam };

const char* aggregator_name(AggregatorKind kind);
AggregatorKind parse_aggregator(const std::string& name);

struct AggregatorState {
  AggregatorKind kind = AggregatorKind::kFedAvg;
  double server_lr = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  MergedDelta adam_m;  // shaped like the global model
  MergedDelta adam_v;
  std::uint64_t adam_step = 0;

  static AggregatorState make(AggregatorKind kind, const LayeredModel& model,
                              double server_lr, double beta1 = 0.9, double beta2 = 0.999,
                              double eps = 1e-8);
};

// Per layer: sample-weighted mean of the deltas of the updates that trained
// that layer. Layers nobody trained are absent (zero delta).
MergedDelta aggregate_fedavg(const LayeredModel& global,
                             std::span<const ClientUpdate> updates);

// Server Adam on the pseudo-gradient g = -fedavg delta. Layers nobody trained
// see g = 0, so their moments decay. The result covers every layer.
MergedDelta aggregate_fedopt(AggregatorState& state, const LayeredModel& global,
                             std::span<const ClientUpdate> updates);

MergedDelta aggregate(AggregatorState& state, const LayeredModel& global,
                      std::span<const ClientUpdate> updates);

}  // namespace timelyfl

#endif  // TIMELYFL_AGGREGATION_H_
