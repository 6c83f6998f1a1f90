#include "timelyfl/metrics.h"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <ostream>

#include "timelyfl/errors.h"
#include "timelyfl/text.h"

namespace timelyfl {

ParticipationReport participation(const RunLog& log, std::size_t population_size) {
  ParticipationReport rep;
  rep.total_aggregations = log.aggregation_count();
  rep.contributions.assign(population_size, 0);
  for (std::size_t i = 1; i < log.records.size(); ++i) {
    for (int c : log.records[i].participants) {
      if (c < 0 || static_cast<std::size_t>(c) >= population_size) {
        throw StructuralError("participant " + std::to_string(c) + " outside population");
      }
      rep.contributions[static_cast<std::size_t>(c)] += 1;
    }
  }
  rep.per_client_rate.resize(population_size, 0.0);
  double sum = 0.0;
  for (std::size_t c = 0; c < population_size; ++c) {
    const double rate = rep.total_aggregations == 0
                            ? 0.0
                            : static_cast<double>(rep.contributions[c]) /
                                  static_cast<double>(rep.total_aggregations);
    rep.per_client_rate[c] = rate;
    sum += rate;
    const auto bucket = std::min<std::size_t>(9, static_cast<std::size_t>(rate * 10.0));
    rep.histogram[bucket] += 1;
  }
  rep.mean_rate = population_size == 0 ? 0.0 : sum / static_cast<double>(population_size);
  return rep;
}

std::vector<CurvePoint> learning_curve(const RunLog& log) {
  std::vector<CurvePoint> out;
  for (const auto& r : log.records) {
    if (r.evaluated) out.push_back({r.time_s, r.accuracy, r.loss});
  }
  return out;
}

TimeToTarget time_to_target(std::span<const CurvePoint> curve, double target,
                            TargetKind kind) {
  TimeToTarget t;
  t.target = target;
  for (const auto& p : curve) {
    const bool met = kind == TargetKind::kAccuracy ? p.accuracy >= target : p.loss <= target;
    if (met) {
      t.time_s = p.time_s;
      break;
    }
  }
  return t;
}

TimeToTarget time_to_target(const RunLog& log, double target, TargetKind kind) {
  auto curve = learning_curve(log);
  return time_to_target(curve, target, kind);
}

std::vector<ComparisonRow> compare(std::span<const NamedRun> runs,
                                   std::span<const double> targets, TargetKind kind) {
  if (runs.size() < 2) throw StructuralError("comparison needs at least two runs");
  std::vector<ComparisonRow> rows;
  for (double target : targets) {
    std::vector<ComparisonRow> block;
    double fastest = std::numeric_limits<double>::infinity();
    for (const auto& run : runs) {
      TimeToTarget t = time_to_target(*run.log, target, kind);
      block.push_back({run.name, target, t.time_s, std::nullopt});
      if (t.time_s) fastest = std::min(fastest, *t.time_s);
    }
    for (auto& row : block) {
      if (row.time_s) {
        row.ratio = fastest > 0.0 ? *row.time_s / fastest : 1.0;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string format_ratio(const std::optional<double>& ratio) {
  if (!ratio) return "not-reached";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fx", *ratio);
  return buf;
}

void write_participation_csv(std::ostream& out, const ParticipationReport& report) {
  out << "client_id,contributions,total_aggs,rate\n";
  for (std::size_t c = 0; c < report.contributions.size(); ++c) {
    out << c << "," << report.contributions[c] << "," << report.total_aggregations << ","
        << format_double(report.per_client_rate[c]) << "\n";
  }
}

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> curve) {
  out << "time_s,accuracy,loss\n";
  for (const auto& p : curve) {
    out << format_double(p.time_s) << "," << format_double(p.accuracy) << ","
        << format_double(p.loss) << "\n";
  }
}

void write_comparison_csv(std::ostream& out, std::span<const ComparisonRow> rows) {
  out << "strategy,target,time_s,ratio\n";
  for (const auto& r : rows) {
    out << r.strategy << "," << format_double(r.target) << ","
        << (r.time_s ? format_double(*r.time_s) : std::string("not-reached")) << ","
        << format_ratio(r.ratio) << "\n";
  }
}

}  // namespace timelyfl
