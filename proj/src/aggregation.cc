#include "timelyfl/aggregation.h"

#include <cmath>

#include "timelyfl/errors.h"

namespace timelyfl {

namespace {

LayerDelta zeros_like(const Layer& layer) {
  return {Matrix(layer.out_dim(), layer.in_dim()), std::vector<double>(layer.out_dim(), 0.0)};
}

MergedDelta zeros_like(const LayeredModel& model) {
  MergedDelta out;
  for (std::size_t i = 0; i < model.layer_count(); ++i) out.emplace(i, zeros_like(model.layer(i)));
  return out;
}

}  // namespace

const char* aggregator_name(AggregatorKind kind) {
  return kind == AggregatorKind::kFedAvg ? "fedavg" : "fedopt";
}

AggregatorKind parse_aggregator(const std::string& name) {
  if (name == "fedavg") return AggregatorKind::kFedAvg;
  if (name == "fedopt" || name == "fedopt-adam") return AggregatorKind::kFedOptAdam;
  throw ValidationError("unknown aggregator '" + name + "' (expected fedavg or fedopt)");
}

AggregatorState AggregatorState::make(AggregatorKind kind, const LayeredModel& model,
                                      double server_lr, double beta1, double beta2,
                                      double eps) {
  AggregatorState s;
  s.kind = kind;
  s.server_lr = server_lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  if (kind == AggregatorKind::kFedOptAdam) {
    s.adam_m = zeros_like(model);
    s.adam_v = zeros_like(model);
  }
  return s;
}

MergedDelta aggregate_fedavg(const LayeredModel& global,
                             std::span<const ClientUpdate> updates) {
  MergedDelta sums;
  std::map<std::size_t, double> weight;
  for (const ClientUpdate& u : updates) {
    validate_update(u, global);
    const double w = static_cast<double>(u.sample_count);
    for (const auto& [li, d] : u.layer_deltas) {
      auto [it, fresh] = sums.try_emplace(li, zeros_like(global.layer(li)));
      LayerDelta& acc = it->second;
      for (std::size_t j = 0; j < acc.weights.size(); ++j) {
        acc.weights.values()[j] += w * d.weights.values()[j];
      }
      for (std::size_t j = 0; j < acc.biases.size(); ++j) acc.biases[j] += w * d.biases[j];
      weight[li] += w;
    }
  }
  for (auto& [li, acc] : sums) {
    const double total = weight[li];
    for (double& v : acc.weights.values()) v /= total;
    for (double& v : acc.biases) v /= total;
  }
  return sums;
}

MergedDelta aggregate_fedopt(AggregatorState& state, const LayeredModel& global,
                             std::span<const ClientUpdate> updates) {
  if (state.adam_m.size() != global.layer_count()) {
    throw StructuralError("optimizer state does not match model depth");
  }
  const MergedDelta mean = aggregate_fedavg(global, updates);
  state.adam_step += 1;
  const double t = static_cast<double>(state.adam_step);
  const double m_correction = 1.0 - std::pow(state.beta1, t);
  const double v_correction = 1.0 - std::pow(state.beta2, t);

  MergedDelta out = zeros_like(global);
  for (auto& [li, step] : out) {
    auto found = mean.find(li);
    const LayerDelta* avg = found == mean.end() ? nullptr : &found->second;
    auto update_entry = [&](double delta, double& m, double& v) {
      const double g = -delta;
      m = state.beta1 * m + (1.0 - state.beta1) * g;
      v = state.beta2 * v + (1.0 - state.beta2) * g * g;
      const double m_hat = m / m_correction;
      const double v_hat = v / v_correction;
      return -state.server_lr * m_hat / (std::sqrt(v_hat) + state.eps);
    };
    LayerDelta& m = state.adam_m.at(li);
    LayerDelta& v = state.adam_v.at(li);
    for (std::size_t j = 0; j < step.weights.size(); ++j) {
      const double d = avg ? avg->weights.values()[j] : 0.0;
      step.weights.values()[j] = update_entry(d, m.weights.values()[j], v.weights.values()[j]);
    }
    for (std::size_t j = 0; j < step.biases.size(); ++j) {
      const double d = avg ? avg->biases[j] : 0.0;
      step.biases[j] = update_entry(d, m.biases[j], v.biases[j]);
    }
  }
  return out;
}

MergedDelta aggregate(AggregatorState& state, const LayeredModel& global,
                      std::span<const ClientUpdate> updates) {
  if (state.kind == AggregatorKind::kFedAvg) {
    MergedDelta d = aggregate_fedavg(global, updates);
    if (state.server_lr != 1.0) {
      for (auto& [li, ld] : d) {
        for (double& v : ld.weights.values()) v *= state.server_lr;
        for (double& v : ld.biases) v *= state.server_lr;
      }
    }
    return d;
  }
  return aggregate_fedopt(state, global, updates);
}

}  // namespace timelyfl
