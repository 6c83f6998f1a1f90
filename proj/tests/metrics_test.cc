#include <sstream>
#include <vector>

#include "doctest.h"
#include "timelyfl/errors.h"
#include "timelyfl/metrics.h"

namespace timelyfl {
namespace {

RunLog log_with(std::vector<std::vector<int>> participants, std::size_t population) {
  RunLog log;
  log.population_size = population;
  log.records.emplace_back();
  double t = 0.0;
  for (auto& p : participants) {
    AggregationRecord r;
    r.round = log.records.size();
    r.time_s = t += 10.0;
    r.participants = std::move(p);
    log.records.push_back(std::move(r));
  }
  return log;
}

RunLog curve_log(std::vector<std::pair<double, double>> points) {
  RunLog log;
  for (auto [t, acc] : points) {
    AggregationRecord r;
    r.time_s = t;
    r.accuracy = acc;
    r.evaluated = true;
    log.records.push_back(r);
  }
  return log;
}

}  // namespace

TEST_CASE("participation: rate is contributions over aggregations") {
  std::vector<std::vector<int>> p(20);
  for (int i = 0; i < 5; ++i) p[static_cast<std::size_t>(i)] = {0, 1};
  for (int i = 5; i < 20; ++i) p[static_cast<std::size_t>(i)] = {1};
  ParticipationReport r = participation(log_with(p, 3), 3);
  CHECK(r.total_aggregations == 20);
  CHECK(r.per_client_rate[0] == 0.25);
  CHECK(r.per_client_rate[1] == 1.0);
  CHECK(r.per_client_rate[2] == 0.0);
  CHECK(r.mean_rate == doctest::Approx(1.25 / 3));
  CHECK(r.histogram[0] == 1);
  CHECK(r.histogram[2] == 1);
  CHECK(r.histogram[9] == 1);
  CHECK_THROWS_AS(participation(log_with({{5}}, 3), 3), StructuralError);
}

TEST_CASE("time_to_target: first crossing") {
  std::vector<CurvePoint> c{{10, 0.5, 0}, {20, 0.7, 0}};
  CHECK(time_to_target(c, 0.6).time_s == 20.0);
  CHECK_FALSE(time_to_target(c, 0.9).time_s.has_value());

  std::vector<CurvePoint> wobble{{1, 0.2, 0}, {2, 0.65, 0}, {3, 0.4, 0}, {4, 0.8, 0}};
  CHECK(time_to_target(wobble, 0.6).time_s == 2.0);

  std::vector<CurvePoint> loss{{1, 0, 2.0}, {2, 0, 0.9}};
  CHECK(time_to_target(loss, 1.0, TargetKind::kLoss).time_s == 2.0);
}

TEST_CASE("compare: ratios against the fastest") {
  RunLog a = curve_log({{0, 0.1}, {10, 0.9}});
  RunLog b = curve_log({{0, 0.1}, {14.3, 0.9}});
  RunLog never = curve_log({{0, 0.1}, {50, 0.2}});
  std::vector<NamedRun> runs{{"A", &a}, {"B", &b}, {"C", &never}};
  std::vector<double> targets{0.5};
  auto rows = compare(runs, targets);
  REQUIRE(rows.size() == 3);
  CHECK(format_ratio(rows[0].ratio) == "1.00x");
  CHECK(format_ratio(rows[1].ratio) == "1.43x");
  CHECK(format_ratio(rows[2].ratio) == "not-reached");

  std::vector<NamedRun> tie{{"A", &a}, {"A2", &a}};
  auto tied = compare(tie, targets);
  CHECK(format_ratio(tied[0].ratio) == "1.00x");
  CHECK(format_ratio(tied[1].ratio) == "1.00x");

  std::ostringstream out;
  write_comparison_csv(out, rows);
  CHECK(out.str() ==
        "strategy,target,time_s,ratio\nA,0.5,10,1.00x\nB,0.5,14.300000000000001,1.43x\n"
        "C,0.5,not-reached,not-reached\n");
}

}  // namespace timelyfl
