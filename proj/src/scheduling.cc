#include "timelyfl/scheduling.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "timelyfl/errors.h"

namespace timelyfl {

TimeEstimate local_time_update(int client_id, double probe_compute_s, double progress,
                               double payload_bytes, double bandwidth_bps) {
  if (!(bandwidth_bps > 0.0)) throw StructuralError("bandwidth must be > 0");
  if (!(progress > 0.0) || progress > 1.0) {
    throw StructuralError("probe progress must be in (0, 1]");
  }
  if (!(payload_bytes > 0.0) || !(probe_compute_s > 0.0)) {
    throw StructuralError("payload and probe time must be > 0");
  }
  TimeEstimate e;
  e.client_id = client_id;
  e.t_com_unit = payload_bytes / bandwidth_bps;
  e.t_cmp_unit = probe_compute_s / progress;
  e.t_total_unit = e.t_cmp_unit + e.t_com_unit;
  return e;
}

double aggregation_interval(std::span<const TimeEstimate> estimates, std::size_t k) {
  if (k < 1 || k > estimates.size()) {
    throw StructuralError("aggregation target k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(estimates.size()) + "]");
  }
  std::vector<double> totals;
  totals.reserve(estimates.size());
  for (const auto& e : estimates) totals.push_back(e.t_total_unit);
  std::nth_element(totals.begin(), totals.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   totals.end());
  return totals[k - 1];
}

Schedule workload_schedule(double interval, const TimeEstimate& estimate,
                           std::uint64_t round) {
  if (!(interval > 0.0)) throw StructuralError("aggregation interval must be > 0");
  if (!(estimate.t_cmp_unit > 0.0) || !(estimate.t_com_unit > 0.0)) {
    throw StructuralError("time estimates must be > 0");
  }
  Schedule s;
  s.client_id = estimate.client_id;
  s.round = round;
  const double fill = std::floor((interval - estimate.t_com_unit) / estimate.t_cmp_unit);
  s.epochs = fill >= 1.0 ? static_cast<int>(fill) : 1;
  s.ratio = std::min(interval / (estimate.t_com_unit + estimate.t_cmp_unit), 1.0);
  s.report_deadline = interval - estimate.t_com_unit * s.ratio;
  if (s.ratio < 1.0 && s.epochs != 1) {
    throw InvariantError("partial-training client " + std::to_string(s.client_id) +
                         " was assigned " + std::to_string(s.epochs) + " epochs");
  }
  return s;
}

bool fits_interval(const Schedule& schedule, const TimeEstimate& estimate,
                   double interval) {
  const double used = estimate.t_cmp_unit * schedule.epochs * schedule.ratio +
                      estimate.t_com_unit * schedule.ratio;
  return used <= interval * (1.0 + 1e-12);
}

double suffix_fraction(const LayeredModel& model, std::size_t start) {
  return static_cast<double>(model.suffix_parameter_count(start)) /
         static_cast<double>(model.parameter_count());
}

FreezeMask ratio_to_mask(double ratio, const LayeredModel& model) {
  if (!(ratio > 0.0) || ratio > 1.0) throw StructuralError("ratio must be in (0, 1]");
  for (std::size_t start = 0; start + 1 < model.layer_count(); ++start) {
    if (suffix_fraction(model, start) <= ratio) return {start};
  }
  return FreezeMask::output_only(model);
}

}  // namespace timelyfl
