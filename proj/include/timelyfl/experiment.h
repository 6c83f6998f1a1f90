#ifndef TIMELYFL_EXPERIMENT_H_
#define TIMELYFL_EXPERIMENT_H_

#include <filesystem>
#include <string>
#include <vector>

#include "timelyfl/config.h"
#include "timelyfl/metrics.h"
#include "timelyfl/simulator.h"

namespace timelyfl {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kOutputDirEnv = "TIMELYFL_OUTPUT_DIR";

struct ExperimentInputs {
  std::vector<DeviceProfile> population;
  FederatedData data;
  Dataset train;  // pooled training set, before partitioning
};

// Loads or synthesizes devices and data. Missing input files fail here,
// before any simulation work.
ExperimentInputs prepare_inputs(const RunConfig& config);

// Test accuracy of a linear softmax classifier trained on the pooled data.
double oracle_accuracy(const ExperimentInputs& inputs, std::uint64_t seed);

// output_dir, unless TIMELYFL_OUTPUT_DIR is set.
std::filesystem::path output_dir(const RunConfig& config);

// Runs one protocol and writes runlog.csv, participation.csv, curve.csv,
// schedule.csv, final_model.ckpt, resolved_config.json and manifest.json.
RunLog run_experiment(const RunConfig& config, const std::filesystem::path& dir);
RunLog run_experiment(const RunConfig& config, const ExperimentInputs& inputs,
                      const std::filesystem::path& dir);

// Runs sync, fedbuff and timelyfl from the same seed into per-protocol
// subdirectories and writes comparison.csv. Targets default to 80% of the
// oracle accuracy. Returns the comparison rows.
std::vector<ComparisonRow> run_comparison(const RunConfig& config,
                                          const std::filesystem::path& dir);

// Grid over data_alpha or aggregation_target; one comparison per value plus
// sweep.csv (param,value,strategy,target,time_s,ratio).
void run_sweep(const RunConfig& config, const std::string& param,
               const std::vector<std::string>& values, const std::filesystem::path& dir);

}  // namespace timelyfl

#endif  // TIMELYFL_EXPERIMENT_H_
