// Acceptance suite. One line per criterion; exit status is nonzero if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "timelyfl/aggregation.h"
#include "timelyfl/experiment.h"
#include "timelyfl/metrics.h"
#include "timelyfl/scheduling.h"
#include "timelyfl/simulator.h"

namespace fs = std::filesystem;
using namespace timelyfl;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, const char* name, double budget_s, const std::function<Verdict()>& body) {
  const auto t0 = Clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  const bool in_time = secs < budget_s;
  const bool ok = v.pass && in_time;
  if (!ok) ++failures;
  std::printf("%s %d %s: %s (%.1fs of %.0fs)%s\n", ok ? "PASS" : "FAIL", id, name,
              v.detail.c_str(), secs, budget_s, in_time ? "" : " over time budget");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// 1: schedule outputs against an independent re-derivation.
Verdict schedule_formulas() {
  RngStream rng(2024, Purpose::kModelInit, 7);
  int checked = 0, wrong = 0;
  for (int i = 0; i < 1000; ++i) {
    // Log-spread magnitudes, so every branch (E > 1, partial, upload-bound) shows up.
    const double t_cmp = std::exp(rng.uniform(std::log(0.5), std::log(500.0)));
    const double t_com = std::exp(rng.uniform(std::log(0.1), std::log(300.0)));
    const double interval = std::exp(rng.uniform(std::log(1.0), std::log(1000.0)));
    const TimeEstimate est{i, t_cmp, t_com, t_cmp + t_com};
    const Schedule s = workload_schedule(interval, est);

    int epochs = 1;
    while (t_com + (epochs + 1) * t_cmp <= interval) ++epochs;
    const double ratio = t_cmp + t_com <= interval ? 1.0 : interval / (t_cmp + t_com);
    const double report = interval - t_com * ratio;

    const double tol = 4 * std::numeric_limits<double>::epsilon();
    bool ok = s.epochs == epochs && std::abs(s.ratio - ratio) <= tol * ratio &&
              std::abs(s.report_deadline - report) <= tol * interval;
    if (ratio < 1.0) ok = ok && std::abs(s.report_deadline - ratio * t_cmp) <= 8 * tol * interval;
    // Interval constraint on the emitted plan.
    ok = ok && fits_interval(s, est, interval) &&
         s.epochs * s.ratio * t_cmp + s.ratio * t_com <= interval * (1 + tol);
    ++checked;
    if (!ok) ++wrong;
  }
  return {wrong == 0 && checked >= 20,
          std::to_string(checked - wrong) + "/" + std::to_string(checked) + " triples exact"};
}

double loss_of(const LayeredModel& m, const Matrix& x, const std::vector<int>& y) {
  return cross_entropy(forward(m, x).logits, y);
}

DataShard random_shard(std::size_t n, std::size_t dim, std::size_t classes, std::uint64_t seed) {
  RngStream rng(seed, Purpose::kSyntheticData, 1);
  DataShard s;
  s.client_id = 0;
  s.features = Matrix(n, dim);
  for (double& v : s.features.values()) v = rng.uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) s.labels.push_back(static_cast<int>(rng.below(classes)));
  return s;
}

// 2: analytic gradients against central differences.
Verdict gradients() {
  double worst = 0.0;
  std::size_t entries = 0;
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    RngStream rng(trial, Purpose::kModelInit, 5);
    std::vector<std::size_t> dims{2 + rng.below(5)};
    const std::size_t depth = 1 + rng.below(3);
    for (std::size_t i = 0; i < depth; ++i) dims.push_back(2 + rng.below(6));
    dims.push_back(2 + rng.below(5));
    LayeredModel m = make_mlp(dims, 500 + trial);
    DataShard b = random_shard(1 + rng.below(8), dims.front(), dims.back(), trial);
    GradientSet g = backward_partial(m, forward(m, b.features).cache, b.labels, FreezeMask::full());

    const double h = 1e-5;
    for (std::size_t li = 0; li < m.layer_count(); ++li) {
      const std::size_t nw = m.layer(li).weights.size();
      for (std::size_t j = 0; j < nw + m.layer(li).biases.size(); ++j) {
        auto param = [&](LayeredModel& mm) -> double& {
          Layer& l = mm.mutable_layer(li);
          return j < nw ? l.weights.values()[j] : l.biases[j - nw];
        };
        LayeredModel plus = m, minus = m;
        param(plus) += h;
        param(minus) -= h;
        const double numeric =
            (loss_of(plus, b.features, b.labels) - loss_of(minus, b.features, b.labels)) / (2 * h);
        const double analytic = j < nw ? g.at(li).weights.values()[j] : g.at(li).biases[j - nw];
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
        ++entries;
      }
    }
  }
  return {worst < 1e-4, std::to_string(entries) + " entries, max rel err " + fmt("%.2e", worst)};
}

// 3: frozen prefix untouched, upload is exactly the trainable suffix.
Verdict freezing() {
  LayeredModel m = make_mlp(std::vector<std::size_t>{6, 8, 8, 5, 4}, 31);
  DataShard s = random_shard(40, 6, 4, 31);
  int bad = 0;
  for (std::size_t start = 0; start < m.layer_count(); ++start) {
    ClientUpdate u = local_train(m, s, {3, FreezeMask{start}, 0.2, 8},
                                 RngStream(31, Purpose::kBatchOrder, 0, start));
    std::vector<std::size_t> want(m.layer_count() - start);
    std::iota(want.begin(), want.end(), start);
    std::vector<std::size_t> keys;
    for (const auto& [li, d] : u.layer_deltas) keys.push_back(li);
    if (u.trained_layers != want || keys != want) ++bad;
    LayeredModel after = apply_update(m, u.layer_deltas);
    for (std::size_t li = 0; li < start; ++li) {
      if (!(after.layer(li) == m.layer(li))) ++bad;
    }
  }
  return {bad == 0, std::to_string(m.layer_count()) + " masks, " + std::to_string(bad) + " violations"};
}

RunConfig base_config(std::uint64_t seed) {
  RunConfig c;
  c.seed = static_cast<std::int64_t>(seed);
  resolve(c);
  return c;
}

// 4: (a) TimelyFL degenerates to SyncFL; (b) FedAvg equals the weighted mean.
Verdict equivalence() {
  RunConfig c;
  c.client_count = 8;
  c.concurrency = 8;
  c.aggregation_target = 8;
  c.rounds = 12;
  c.samples_per_class = 50;
  c.feature_dim = 6;
  c.class_count = 4;
  c.hidden_layers = "12,8";
  c.disturbance = false;
  c.noise_eta = 0.0;
  c.seed = 5;
  resolve(c);

  std::vector<DeviceProfile> population;
  for (int i = 0; i < 8; ++i) population.push_back({i, 0.7, {3e4}});
  SyntheticData d = generate_synthetic(4, 6, 50, 5);  // 160 training rows
  FederatedData data;
  data.test = d.test;
  for (std::size_t k = 0; k < 8; ++k) {
    std::vector<std::size_t> rows;
    for (std::size_t i = k; i < d.train.size(); i += 8) rows.push_back(i);
    DataShard s{gather_rows(d.train.features, rows), {}, static_cast<int>(k)};
    for (std::size_t i : rows) s.labels.push_back(d.train.labels[i]);
    data.shards.push_back(std::move(s));
  }

  RunConfig sync = c, timely = c;
  sync.protocol = "sync";
  timely.protocol = "timelyfl";
  RunLog a = run(sync, population, data);
  RunLog b = run(timely, population, data);
  bool same = a.records.size() == b.records.size() && a.final_model == b.final_model;
  for (std::size_t i = 0; same && i < a.records.size(); ++i) {
    same = a.records[i].accuracy == b.records[i].accuracy &&
           a.records[i].loss == b.records[i].loss &&
           a.records[i].participants == b.records[i].participants;
  }

  // (b): full participation, every layer, unequal shard sizes.
  LayeredModel global = make_mlp(std::vector<std::size_t>{6, 12, 8, 4}, 9);
  std::vector<ClientUpdate> updates;
  for (int k = 0; k < 5; ++k) {
    DataShard s = random_shard(3 + 7 * static_cast<std::size_t>(k), 6, 4, 100 + k);
    s.client_id = k;
    updates.push_back(local_train(global, s, {2, FreezeMask::full(), 0.1, 4},
                                  RngStream(9, Purpose::kBatchOrder, k)));
  }
  MergedDelta merged = aggregate_fedavg(global, updates);
  bool mean_exact = merged.size() == global.layer_count();
  for (std::size_t li = 0; mean_exact && li < global.layer_count(); ++li) {
    const auto& w = merged.at(li).weights.values();
    for (std::size_t j = 0; j < w.size(); ++j) {
      double num = 0.0, den = 0.0;
      for (const auto& u : updates) {
        num += static_cast<double>(u.sample_count) * u.layer_deltas.at(li).weights.values()[j];
        den += static_cast<double>(u.sample_count);
      }
      if (w[j] != num / den) mean_exact = false;
    }
  }
  return {same && mean_exact, std::string("timelyfl==sync over ") +
                                  std::to_string(a.aggregation_count()) + " rounds: " +
                                  (same ? "yes" : "no") + ", fedavg mean exact: " +
                                  (mean_exact ? "yes" : "no")};
}

// 5: disturbance mass at the clamp points.
Verdict disturbance() {
  RngStream rng(77, Purpose::kDisturbance);
  const int n = 100000;
  int at_one = 0, at_max = 0, outside = 0;
  for (int i = 0; i < n; ++i) {
    const double w = sample_disturbance(rng);
    if (w == 1.0) ++at_one;
    if (w == kDisturbanceMax) ++at_max;
    if (w < 1.0 || w > kDisturbanceMax) ++outside;
  }
  const double p1 = at_one / double(n), p13 = at_max / double(n);
  const bool ok = std::abs(p1 - 0.5) <= 0.01 && std::abs(p13 - 0.1587) <= 0.01 && outside == 0;
  return {ok, "P(w=1)=" + fmt("%.4f", p1) + " P(w=1.3)=" + fmt("%.4f", p13) +
                  " outside=" + std::to_string(outside)};
}

// 6: participation, TimelyFL against FedBuff.
Verdict participation_gap() {
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed : {1, 2, 3}) {
    RunConfig c = base_config(seed);
    c.aggregation_target = 32;
    ExperimentInputs in = prepare_inputs(c);
    RunConfig t = c, f = c;
    t.protocol = "timelyfl";
    f.protocol = "fedbuff";
    t.eval_every = f.eval_every = 1000;
    ParticipationReport pt = participation(run(t, in.population, in.data), 64);
    ParticipationReport pf = participation(run(f, in.population, in.data), 64);
    int higher = 0;
    for (std::size_t i = 0; i < 64; ++i) higher += pt.per_client_rate[i] > pf.per_client_rate[i];
    const double gap = pt.mean_rate - pf.mean_rate;
    const double frac = higher / 64.0;
    ok = ok && gap >= 0.10 && frac > 0.5;
    detail += "seed " + std::to_string(seed) + ": " + fmt("%.3f", pt.mean_rate) + " vs " +
              fmt("%.3f", pf.mean_rate) + ", higher " + fmt("%.2f", frac) + "; ";
  }
  return {ok, detail};
}

struct Times {
  std::optional<double> sync, fedbuff, timelyfl;
};

std::optional<double> time_for(RunConfig c, const char* protocol, const ExperimentInputs& in,
                               double target) {
  c.protocol = protocol;
  c.rounds = 400;
  c.stop_at_accuracy = target;
  return time_to_target(run(c, in.population, in.data), target).time_s;
}

double or_inf(const std::optional<double>& t) {
  return t ? *t : std::numeric_limits<double>::infinity();
}

std::string show(const std::optional<double>& t) { return t ? fmt("%.0f", *t) : "inf"; }

// 7: TimelyFL < FedBuff < SyncFL time-to-target in most seeds.
Verdict time_ordering() {
  bool ok = true;
  std::string detail;
  for (const char* agg : {"fedavg", "fedopt"}) {
    int wins = 0;
    detail += std::string(agg) + " [";
    for (std::uint64_t seed : {1, 2, 3}) {
      RunConfig c = base_config(seed);
      c.aggregator = agg;
      c.data_alpha = 0.1;
      ExperimentInputs in = prepare_inputs(c);
      const double target = 0.8 * oracle_accuracy(in, seed);
      Times t{time_for(c, "sync", in, target), time_for(c, "fedbuff", in, target),
              time_for(c, "timelyfl", in, target)};
      const bool ordered = or_inf(t.timelyfl) < or_inf(t.fedbuff) &&
                           or_inf(t.fedbuff) < or_inf(t.sync);
      wins += ordered;
      detail += show(t.timelyfl) + "<" + show(t.fedbuff) + "<" + show(t.sync) +
                (ordered ? " y" : " n") + (seed < 3 ? ", " : "");
    }
    detail += "] ";
    ok = ok && wins >= 2;
  }
  return {ok, "target 0.8*oracle; tfl<fb<sync per seed: " + detail};
}

// 8: FedBuff/TimelyFL advantage does not shrink as data_alpha drops.
Verdict noniid_trend() {
  int holds = 0;
  std::string detail;
  for (std::uint64_t seed : {1, 2, 3}) {
    std::vector<double> advantage;
    for (double alpha : {1.0, 0.5, 0.1}) {
      RunConfig c = base_config(seed);
      c.data_alpha = alpha;
      ExperimentInputs in = prepare_inputs(c);
      const double target = 0.8 * oracle_accuracy(in, seed);
      advantage.push_back(or_inf(time_for(c, "fedbuff", in, target)) /
                          or_inf(time_for(c, "timelyfl", in, target)));
    }
    const bool ok = advantage[1] >= advantage[0] && advantage[2] >= advantage[1];
    holds += ok;
    detail += "seed " + std::to_string(seed) + " " + fmt("%.2f", advantage[0]) + "/" +
              fmt("%.2f", advantage[1]) + "/" + fmt("%.2f", advantage[2]) +
              (ok ? " y" : " n") + "; ";
  }
  return {holds >= 2, "fedbuff/timelyfl time at alpha 1.0/0.5/0.1: " + detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 9: repeated runs write byte-identical CSVs.
Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "timelyfl-acceptance-determinism";
  fs::remove_all(root);
  int compared = 0, differ = 0;
  for (const char* protocol : {"sync", "fedbuff", "timelyfl"}) {
    RunConfig c = base_config(4);
    c.protocol = protocol;
    c.rounds = 20;
    c.noise_eta = 0.1;
    run_experiment(c, root / protocol / "a");
    run_experiment(c, root / protocol / "b");
    for (const char* f : {"runlog.csv", "participation.csv", "curve.csv", "schedule.csv"}) {
      ++compared;
      const std::string a = slurp(root / protocol / "a" / f);
      if (a.empty() || a != slurp(root / protocol / "b" / f)) ++differ;
    }
  }
  fs::remove_all(root);
  return {differ == 0, std::to_string(compared) + " CSV pairs, " + std::to_string(differ) + " differ"};
}

}  // namespace

int main() {
  report(1, "schedule formulas", 1, schedule_formulas);
  report(2, "gradients", 30, gradients);
  report(3, "freezing", 10, freezing);
  report(4, "equivalence", 30, equivalence);
  report(5, "disturbance", 5, disturbance);
  report(6, "participation", 300, participation_gap);
  report(7, "time-to-accuracy order", 600, time_ordering);
  report(8, "non-iid trend", 900, noniid_trend);
  report(9, "determinism", 600, determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
