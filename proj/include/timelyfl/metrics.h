#ifndef TIMELYFL_METRICS_H_
#define TIMELYFL_METRICS_H_

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "timelyfl/simulator.h"

namespace timelyfl {

struct ParticipationReport {
  std::size_t total_aggregations = 0;
  std::vector<std::size_t> contributions;  // indexed by client id
  std::vector<double> per_client_rate;     // contributions / total_aggregations
  double mean_rate = 0.0;                  // over the whole population
  std::array<std::size_t, 10> histogram{};  // buckets of width 0.1; 1.0 in the last
};

// Counts come from the server-side participant sets in the log.
ParticipationReport participation(const RunLog& log, std::size_t population_size);

struct CurvePoint {
  double time_s = 0.0;
  double accuracy = 0.0;
  double loss = 0.0;
};

std::vector<CurvePoint> learning_curve(const RunLog& log);

enum class TargetKind { kAccuracy, kLoss };

struct TimeToTarget {
  double target = 0.0;
  std::optional<double> time_s;  // empty: never reached
};

// Earliest evaluated point with accuracy >= target (or loss <= target).
TimeToTarget time_to_target(std::span<const CurvePoint> curve, double target,
                            TargetKind kind = TargetKind::kAccuracy);
TimeToTarget time_to_target(const RunLog& log, double target,
                            TargetKind kind = TargetKind::kAccuracy);

struct ComparisonRow {
  std::string strategy;
  double target = 0.0;
  std::optional<double> time_s;
  std::optional<double> ratio;  // time / fastest time at this target
};

struct NamedRun {
  std::string name;
  const RunLog* log = nullptr;
};

std::vector<ComparisonRow> compare(std::span<const NamedRun> runs,
                                   std::span<const double> targets,
                                   TargetKind kind = TargetKind::kAccuracy);

// "1.43x" style, or "not-reached".
std::string format_ratio(const std::optional<double>& ratio);

// client_id,contributions,total_aggs,rate
void write_participation_csv(std::ostream& out, const ParticipationReport& report);
// time_s,accuracy,loss
void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve);
// strategy,target,time_s,ratio
void write_comparison_csv(std::ostream& out, std::span<const ComparisonRow> rows);

}  // namespace timelyfl

#endif  // TIMELYFL_METRICS_H_
