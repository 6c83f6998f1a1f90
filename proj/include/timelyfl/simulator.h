#ifndef TIMELYFL_SIMULATOR_H_
#define TIMELYFL_SIMULATOR_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "timelyfl/config.h"
#include "timelyfl/dataset.h"
#include "timelyfl/device.h"
#include "timelyfl/model.h"
#include "timelyfl/scheduling.h"

namespace timelyfl {

struct FederatedData {
  std::vector<DataShard> shards;  // shards[i].client_id == i
  Dataset test;
};

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
};

// Argmax accuracy (ties go to the lowest class index) and mean
// cross-entropy. Consumes no simulated time.
EvalResult evaluate(const LayeredModel& model, const Dataset& test);

enum class TaskOutcome { kAggregated, kLate, kStale, kBuffered, kUnfinished };

const char* outcome_name(TaskOutcome o);

// What one client was asked to do in one TimelyFL or SyncFL round.
struct ClientAssignment {
  int client_id = 0;
  int epochs = 1;
  double ratio = 1.0;
  std::size_t suffix_start = 0;
  double report_deadline = 0.0;
  double finish_time = 0.0;  // absolute simulated time the upload lands
  TaskOutcome outcome = TaskOutcome::kAggregated;
};

// One row per aggregation. records[0] of a RunLog is the initial model.
struct AggregationRecord {
  std::uint64_t round = 0;
  double time_s = 0.0;
  bool evaluated = false;
  double accuracy = 0.0;
  double loss = 0.0;
  std::vector<int> participants;  // sorted, unique
  std::vector<ClientAssignment> assignments;
  double interval_s = 0.0;     // TimelyFL T_k
  double probe_phase_s = 0.0;  // TimelyFL probe overhead
};

// Every spawned task ends in exactly one bucket.
struct TaskCounters {
  std::size_t spawned = 0;
  std::size_t arrived = 0;
  std::size_t late_dropped = 0;
  std::size_t stale_discarded = 0;
  std::size_t unfinished = 0;

  bool conserved() const {
    return spawned == arrived + late_dropped + stale_discarded + unfinished;
  }
};

struct RunLog {
  std::string protocol;
  std::string aggregator;
  std::size_t population_size = 0;
  std::vector<AggregationRecord> records;
  TaskCounters tasks;
  // Client-side tally: aggregations that consumed one of the client's
  // updates. Kept apart from `records` so the two can be cross-checked.
  std::vector<std::size_t> contributions;
  LayeredModel final_model;

  std::size_t aggregation_count() const { return records.empty() ? 0 : records.size() - 1; }
};

// Model shape for a config: {input, hidden..., classes}.
std::vector<std::size_t> model_dims(const RunConfig& config, std::size_t feature_dim,
                                    std::size_t class_count);

// Runs `config.rounds` rounds (aggregations for FedBuff). The config must
// be resolved; population and shards must be indexed by client id.
// Throws ValidationError on infeasible combinations before any work.
RunLog run(const RunConfig& config, std::span<const DeviceProfile> population,
           const FederatedData& data);

// k clients out of `population`, without replacement, ascending ids.
std::vector<int> sample_cohort(std::size_t population, std::size_t n, RngStream& rng);

// Seconds for one full-model epoch given a per-batch time.
double epoch_compute_s(double per_batch_s, std::size_t batches);
std::size_t batches_per_epoch(std::size_t samples, std::size_t batch_size);

struct CentralizedOptions {
  int epochs = 30;
  double lr = 0.1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
};

// Trains a fresh model on the pooled training set.
LayeredModel train_centralized(std::span<const std::size_t> dims, const Dataset& train,
                               const CentralizedOptions& options);

// time_s,round,accuracy,loss,n_participants; unevaluated rows leave
// accuracy and loss empty.
void write_runlog_csv(std::ostream& out, const RunLog& log);
// round,client_id,epochs,ratio,suffix_start,report_deadline_s,finish_time_s,outcome
void write_schedule_csv(std::ostream& out, const RunLog& log);

}  // namespace timelyfl

#endif  // TIMELYFL_SIMULATOR_H_
