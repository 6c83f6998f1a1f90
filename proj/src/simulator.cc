#include "timelyfl/simulator.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "timelyfl/aggregation.h"
#include "timelyfl/errors.h"
#include "timelyfl/event_queue.h"
#include "timelyfl/fedbuff.h"
#include "timelyfl/text.h"

namespace timelyfl {

EvalResult evaluate(const LayeredModel& model, const Dataset& test) {
  if (test.size() == 0) throw StructuralError("cannot evaluate on an empty test set");
  constexpr std::size_t kChunk = 512;
  std::size_t correct = 0;
  double loss_sum = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < test.size(); begin += kChunk) {
    const std::size_t end = std::min(test.size(), begin + kChunk);
    idx.resize(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    Matrix batch = gather_rows(test.features, idx);
    std::span<const int> labels(test.labels.data() + begin, end - begin);
    ForwardResult fwd = forward(model, batch);
    for (std::size_t s = 0; s < fwd.logits.rows(); ++s) {
      auto row = fwd.logits.row(s);
      // max_element returns the first maximum: lowest class index wins ties.
      auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
      if (best == labels[s]) ++correct;
    }
    loss_sum += cross_entropy(fwd.logits, labels) * static_cast<double>(end - begin);
  }
  const double n = static_cast<double>(test.size());
  return {static_cast<double>(correct) / n, loss_sum / n};
}

const char* outcome_name(TaskOutcome o) {
  switch (o) {
    case TaskOutcome::kAggregated:
      return "aggregated";
    case TaskOutcome::kLate:
      return "late";
    case TaskOutcome::kStale:
      return "stale";
    case TaskOutcome::kBuffered:
      return "buffered";
    case TaskOutcome::kUnfinished:
      return "unfinished";
  }
  return "?";
}

std::vector<std::size_t> model_dims(const RunConfig& config, std::size_t feature_dim,
                                    std::size_t class_count) {
  std::vector<std::size_t> dims{feature_dim};
  for (std::size_t h : config.hidden_dims()) dims.push_back(h);
  dims.push_back(class_count);
  return dims;
}

std::vector<int> sample_cohort(std::size_t population, std::size_t n, RngStream& rng) {
  if (n > population) throw ValidationError("cohort larger than population");
  std::vector<int> ids(population);
  std::iota(ids.begin(), ids.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(ids[i], ids[i + rng.below(population - i)]);
  }
  ids.resize(n);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::size_t batches_per_epoch(std::size_t samples, std::size_t batch_size) {
  return (samples + batch_size - 1) / batch_size;
}

double epoch_compute_s(double per_batch_s, std::size_t batches) {
  // Same arithmetic as the probe estimate t_cmp / beta with beta = 1/batches,
  // so exact estimates reproduce actual times bit for bit.
  return per_batch_s / (1.0 / static_cast<double>(batches));
}

namespace {

class Simulation {
 public:
  Simulation(const RunConfig& config, std::span<const DeviceProfile> population,
             const FederatedData& data)
      : cfg_(config),
        population_(population),
        data_(data),
        seed_(static_cast<std::uint64_t>(config.seed)) {
    if (population.size() != data.shards.size()) {
      throw ValidationError("population has " + std::to_string(population.size()) +
                            " devices but data has " + std::to_string(data.shards.size()) +
                            " shards");
    }
    if (static_cast<std::size_t>(config.concurrency) > population.size()) {
      throw ValidationError("concurrency " + std::to_string(config.concurrency) +
                            " exceeds population size " + std::to_string(population.size()));
    }
    if (config.aggregation_target < 1 || config.aggregation_target > config.concurrency) {
      throw ValidationError("aggregation_target must be in [1, concurrency]");
    }
    for (std::size_t i = 0; i < population.size(); ++i) {
      if (population[i].client_id != static_cast<int>(i) ||
          data.shards[i].client_id != static_cast<int>(i)) {
        throw ValidationError("devices and shards must be indexed by client id");
      }
      if (data.shards[i].size() == 0) {
        throw ValidationError("client " + std::to_string(i) + " has an empty shard");
      }
    }
    if (data.test.size() == 0) throw ValidationError("test set is empty");

    auto dims = model_dims(config, data.test.feature_dim(), data.test.class_count);
    model_ = make_mlp(dims, seed_);
    const AggregatorKind kind = parse_aggregator(config.aggregator);
    aggregator_ = AggregatorState::make(
        kind, model_, kind == AggregatorKind::kFedAvg ? 1.0 : config.server_lr, config.beta1,
        config.beta2, config.adam_eps);
    payload_bytes_ = static_cast<double>(model_.parameter_count()) * config.bytes_per_param;

    log_.protocol = config.protocol;
    log_.aggregator = config.aggregator;
    log_.population_size = population.size();
    log_.contributions.assign(population.size(), 0);
  }

  RunLog run() {
    AggregationRecord initial;
    record_evaluation(initial, true);
    log_.records.push_back(std::move(initial));

    switch (cfg_.protocol_kind()) {
      case Protocol::kSync:
        run_sync();
        break;
      case Protocol::kTimelyFl:
        run_timelyfl();
        break;
      case Protocol::kFedBuff:
        run_fedbuff();
        break;
    }
    if (!log_.tasks.conserved()) throw InvariantError("task outcome counts do not balance");
    cross_check_participation();
    log_.final_model = model_;
    return std::move(log_);
  }

 private:
  std::size_t rounds() const { return static_cast<std::size_t>(cfg_.rounds); }
  std::size_t concurrency() const { return static_cast<std::size_t>(cfg_.concurrency); }

  bool done() const {
    if (log_.aggregation_count() >= rounds()) return true;
    const AggregationRecord& last = log_.records.back();
    return cfg_.stop_at_accuracy > 0.0 && last.evaluated &&
           last.accuracy >= cfg_.stop_at_accuracy;
  }

  void record_evaluation(AggregationRecord& rec, bool force) {
    const bool due = force || rec.round % static_cast<std::uint64_t>(cfg_.eval_every) == 0 ||
                     rec.round >= rounds();
    if (!due) return;
    EvalResult r = evaluate(model_, data_.test);
    rec.evaluated = true;
    rec.accuracy = r.accuracy;
    rec.loss = r.loss;
  }

  std::size_t batches(int client) const {
    return batches_per_epoch(data_.shards[static_cast<std::size_t>(client)].size(),
                             static_cast<std::size_t>(cfg_.batch_size));
  }

  const DeviceProfile& device(int client) const {
    return population_[static_cast<std::size_t>(client)];
  }

  ClientUpdate train_client(int client, int epochs, FreezeMask mask, std::uint64_t key) {
    TrainOptions opts;
    opts.epochs = epochs;
    opts.mask = mask;
    opts.lr = cfg_.client_lr;
    opts.batch_size = static_cast<std::size_t>(cfg_.batch_size);
    RngStream order(seed_, Purpose::kBatchOrder, static_cast<std::uint64_t>(client), key);
    return local_train(model_, data_.shards[static_cast<std::size_t>(client)], opts, order);
  }

  // Applies the aggregate of `updates` (possibly none) at time `now`.
  void aggregate_and_record(std::vector<ClientUpdate>& updates, double now,
                            AggregationRecord rec) {
    std::stable_sort(updates.begin(), updates.end(), [](const auto& a, const auto& b) {
      return std::tie(a.client_id, a.origin_version) < std::tie(b.client_id, b.origin_version);
    });
    MergedDelta merged;
    if (!updates.empty()) merged = aggregate(aggregator_, model_, updates);
    model_ = apply_update(model_, merged);

    rec.round = log_.aggregation_count() + 1;
    rec.time_s = now;
    rec.participants.clear();
    for (const auto& u : updates) {
      if (rec.participants.empty() || rec.participants.back() != u.client_id) {
        rec.participants.push_back(u.client_id);
        log_.contributions[static_cast<std::size_t>(u.client_id)] += 1;
      }
    }
    record_evaluation(rec, cfg_.stop_at_accuracy > 0.0);
    log_.records.push_back(std::move(rec));
  }

  void cross_check_participation() const {
    std::vector<std::size_t> server(population_.size(), 0);
    for (std::size_t i = 1; i < log_.records.size(); ++i) {
      for (int c : log_.records[i].participants) server[static_cast<std::size_t>(c)] += 1;
    }
    if (server != log_.contributions) {
      throw InvariantError("client-side and server-side participation counts disagree");
    }
  }

  std::vector<int> draw_cohort(std::uint64_t round) {
    RngStream rng(seed_, Purpose::kCohort, 0, round);
    return sample_cohort(population_.size(), concurrency(), rng);
  }

  void run_sync() {
    const int epochs = static_cast<int>(cfg_.local_epochs);
    for (std::uint64_t r = 0; !done(); ++r) {
      const double start = clock_.now();
      std::vector<ClientUpdate> pending;
      AggregationRecord rec;
      for (int c : draw_cohort(r)) {
        const RoundCapability cap = round_capability(device(c), seed_, r, cfg_.disturbance);
        ClientUpdate u = train_client(c, epochs, FreezeMask::full(), r);
        const double compute =
            epochs * epoch_compute_s(effective_compute_time(device(c), cap.disturbance_w),
                                     batches(c)) *
            sample_compute_noise(seed_, c, r, cfg_.noise_eta);
        const double finish = start + compute + payload_bytes_ / cap.bandwidth_bps;
        u.arrival_time = finish;
        queue_.push(finish, EventKind::kUpdateArrival, c, pending.size());
        pending.push_back(std::move(u));
        rec.assignments.push_back({c, epochs, 1.0, 0, 0.0, finish, TaskOutcome::kAggregated});
        ++log_.tasks.spawned;
      }
      std::vector<ClientUpdate> arrived;
      while (!queue_.empty()) {
        SimEvent e = queue_.pop();
        clock_.advance_to(e.time);
        arrived.push_back(std::move(pending[e.task]));
        ++log_.tasks.arrived;
      }
      aggregate_and_record(arrived, clock_.now(), std::move(rec));
    }
  }

  void run_timelyfl() {
    const auto k = static_cast<std::size_t>(cfg_.aggregation_target);
    for (std::uint64_t r = 0; !done(); ++r) {
      const double start = clock_.now();
      const std::vector<int> cohort = draw_cohort(r);

      // Probe: one full-model batch per client, reported to the server.
      std::vector<RoundCapability> caps;
      std::vector<double> probe_s;
      for (std::size_t i = 0; i < cohort.size(); ++i) {
        const int c = cohort[i];
        caps.push_back(round_capability(device(c), seed_, r, cfg_.disturbance));
        probe_s.push_back(effective_compute_time(device(c), caps.back().disturbance_w));
        queue_.push(start + probe_s.back(), EventKind::kProbeReport, c, i);
      }
      while (!queue_.empty()) clock_.advance_to(queue_.pop().time);
      const double window = clock_.now();

      std::vector<TimeEstimate> estimates;
      for (std::size_t i = 0; i < cohort.size(); ++i) {
        const int c = cohort[i];
        estimates.push_back(local_time_update(c, probe_s[i],
                                              1.0 / static_cast<double>(batches(c)),
                                              payload_bytes_, caps[i].bandwidth_bps));
      }
      const double interval = aggregation_interval(estimates, k);
      const double deadline = window + interval;
      const double slack = 1e-9 * std::max(1.0, interval);

      AggregationRecord rec;
      rec.interval_s = interval;
      rec.probe_phase_s = window - start;
      std::vector<ClientUpdate> pending;
      for (std::size_t i = 0; i < cohort.size(); ++i) {
        const int c = cohort[i];
        const TimeEstimate& est = estimates[i];
        const Schedule s = workload_schedule(interval, est, r);
        if (!fits_interval(s, est, interval) || s.report_deadline < 0.0) {
          throw InvariantError("schedule for client " + std::to_string(c) +
                               " violates the aggregation interval");
        }
        const FreezeMask mask = ratio_to_mask(s.ratio, model_);
        const double fraction = suffix_fraction(model_, mask.trainable_suffix_start);
        ClientUpdate u = train_client(c, s.epochs, mask, r);
        const double compute = s.epochs * est.t_cmp_unit * fraction *
                               sample_compute_noise(seed_, c, r, cfg_.noise_eta);
        double finish = window + compute + fraction * est.t_com_unit;
        // Rounding can land a feasible upload a few ulps past the deadline.
        if (finish > deadline && finish <= deadline + slack) finish = deadline;
        u.arrival_time = finish;
        queue_.push(finish, EventKind::kUpdateArrival, c, pending.size());
        pending.push_back(std::move(u));
        rec.assignments.push_back({c, s.epochs, s.ratio, mask.trainable_suffix_start,
                                   s.report_deadline, finish, TaskOutcome::kAggregated});
        ++log_.tasks.spawned;
      }
      // Pushed last, so arrivals exactly at the deadline are processed first.
      queue_.push(deadline, EventKind::kAggregationDeadline);

      std::vector<ClientUpdate> on_time;
      while (!queue_.empty()) {
        SimEvent e = queue_.pop();
        if (e.kind == EventKind::kAggregationDeadline) {
          clock_.advance_to(e.time);
          break;
        }
        clock_.advance_to(e.time);
        on_time.push_back(std::move(pending[e.task]));
        ++log_.tasks.arrived;
      }
      // Whatever is still in flight missed the window and is dropped.
      while (!queue_.empty()) {
        SimEvent e = queue_.pop();
        rec.assignments[e.task].outcome = TaskOutcome::kLate;
        ++log_.tasks.late_dropped;
      }
      aggregate_and_record(on_time, deadline, std::move(rec));
    }
  }

  void run_fedbuff() {
    BuffServerState buffer;
    buffer.aggregation_goal = static_cast<std::size_t>(cfg_.aggregation_target);
    buffer.staleness_cap = static_cast<std::uint64_t>(cfg_.staleness_cap);
    const int epochs = static_cast<int>(cfg_.local_epochs);

    std::vector<ClientUpdate> in_flight;
    std::vector<std::uint64_t> task_count(population_.size(), 0);
    std::vector<char> busy(population_.size(), 0);

    auto spawn = [&](int c, double now) {
      const std::uint64_t key = task_count[static_cast<std::size_t>(c)]++;
      const RoundCapability cap = round_capability(device(c), seed_, key, cfg_.disturbance);
      ClientUpdate u = train_client(c, epochs, FreezeMask::full(), key);
      const double compute =
          epochs * epoch_compute_s(effective_compute_time(device(c), cap.disturbance_w),
                                   batches(c)) *
          sample_compute_noise(seed_, c, key, cfg_.noise_eta);
      const double finish = now + compute + payload_bytes_ / cap.bandwidth_bps;
      u.arrival_time = finish;
      queue_.push(finish, EventKind::kUpdateArrival, c, in_flight.size());
      in_flight.push_back(std::move(u));
      busy[static_cast<std::size_t>(c)] = 1;
      ++log_.tasks.spawned;
    };

    if (!done()) {
      for (int c : draw_cohort(0)) spawn(c, 0.0);
    }
    std::uint64_t arrivals = 0;
    while (!done() && !queue_.empty()) {
      SimEvent e = queue_.pop();
      clock_.advance_to(e.time);
      busy[static_cast<std::size_t>(e.client_id)] = 0;
      ++arrivals;
      ClientUpdate u = std::move(in_flight[e.task]);
      const AdmitResult result = fedbuff_admit(buffer, std::move(u), model_.version());
      if (result == AdmitResult::kDiscarded) {
        ++log_.tasks.stale_discarded;
      } else {
        ++log_.tasks.arrived;
      }
      if (result == AdmitResult::kAggregateNow) {
        aggregate_and_record(buffer.buffer, clock_.now(), AggregationRecord{});
        buffer.buffer.clear();
      }
      if (done()) break;

      // Hold concurrency at n: replace the finished client right away.
      std::vector<int> idle;
      for (std::size_t c = 0; c < busy.size(); ++c) {
        if (!busy[c]) idle.push_back(static_cast<int>(c));
      }
      RngStream pick(seed_, Purpose::kReplacement, 0, arrivals);
      spawn(idle[pick.below(idle.size())], clock_.now());
    }
    log_.tasks.unfinished = queue_.size();
  }

  const RunConfig& cfg_;
  std::span<const DeviceProfile> population_;
  const FederatedData& data_;
  std::uint64_t seed_;
  LayeredModel model_;
  AggregatorState aggregator_;
  double payload_bytes_ = 0.0;
  RunLog log_;
  SimClock clock_;
  EventQueue queue_;
};

}  // namespace

RunLog run(const RunConfig& config, std::span<const DeviceProfile> population,
           const FederatedData& data) {
  Simulation sim(config, population, data);
  return sim.run();
}

LayeredModel train_centralized(std::span<const std::size_t> dims, const Dataset& train,
                               const CentralizedOptions& options) {
  LayeredModel model = make_mlp(dims, options.seed);
  DataShard all{train.features, train.labels, 0};
  TrainOptions opts;
  opts.epochs = options.epochs;
  opts.mask = FreezeMask::full();
  opts.lr = options.lr;
  opts.batch_size = options.batch_size;
  RngStream order(options.seed, Purpose::kBatchOrder, ~std::uint64_t{0}, 0);
  ClientUpdate u = local_train(model, all, opts, order);
  return apply_update(model, u.layer_deltas);
}

void write_runlog_csv(std::ostream& out, const RunLog& log) {
  out << "time_s,round,accuracy,loss,n_participants\n";
  for (const auto& r : log.records) {
    out << format_double(r.time_s) << "," << r.round << ",";
    if (r.evaluated) out << format_double(r.accuracy) << "," << format_double(r.loss);
    else out << ",";
    out << "," << r.participants.size() << "\n";
  }
}

void write_schedule_csv(std::ostream& out, const RunLog& log) {
  out << "round,client_id,epochs,ratio,suffix_start,report_deadline_s,finish_time_s,outcome\n";
  for (const auto& r : log.records) {
    for (const auto& a : r.assignments) {
      out << r.round << "," << a.client_id << "," << a.epochs << "," << format_double(a.ratio)
          << "," << a.suffix_start << "," << format_double(a.report_deadline) << ","
          << format_double(a.finish_time) << "," << outcome_name(a.outcome) << "\n";
    }
  }
}

}  // namespace timelyfl
