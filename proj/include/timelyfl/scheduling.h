#ifndef TIMELYFL_SCHEDULING_H_
#define TIMELYFL_SCHEDULING_H_

#include <cstdint>
#include <span>

#include "timelyfl/model.h"

namespace timelyfl {

// Per-client estimate of one full-model epoch of compute and one
// full-model upload, in seconds.
struct TimeEstimate {
  int client_id = 0;
  double t_cmp_unit = 0.0;
  double t_com_unit = 0.0;
  double t_total_unit = 0.0;  // t_cmp_unit + t_com_unit
};

struct Schedule {
  int client_id = 0;
  int epochs = 1;
  double ratio = 1.0;            // partial-training ratio in (0, 1]
  double report_deadline = 0.0;  // seconds after the window opens
  std::uint64_t round = 0;
};

// One-batch probe to unit estimates. `progress` is the fraction of the
// epoch the probe covered (1 / batches per epoch).
TimeEstimate local_time_update(int client_id, double probe_compute_s, double progress,
                               double payload_bytes, double bandwidth_bps);

// k-th smallest t_total_unit (k is 1-based).
double aggregation_interval(std::span<const TimeEstimate> estimates, std::size_t k);

// E = max(floor((T - t_com) / t_cmp), 1)
// ratio = min(T / (t_com + t_cmp), 1)
// t_rpt = T - t_com * ratio
Schedule workload_schedule(double interval, const TimeEstimate& estimate,
                           std::uint64_t round = 0);

// t_cmp * E * ratio + t_com * ratio <= T, with relative slack for rounding.
bool fits_interval(const Schedule& schedule, const TimeEstimate& estimate,
                   double interval);

// Fraction of parameters in layers [start, L).
double suffix_fraction(const LayeredModel& model, std::size_t start);

// Longest output-side suffix whose parameter fraction is <= ratio; the
// output layer alone when even that exceeds ratio.
FreezeMask ratio_to_mask(double ratio, const LayeredModel& model);

}  // namespace timelyfl

#endif  // TIMELYFL_SCHEDULING_H_
