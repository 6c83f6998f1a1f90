#ifndef TIMELYFL_CONFIG_H_
#define TIMELYFL_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace timelyfl {

enum class Protocol { kSync, kFedBuff, kTimelyFl };

const char* protocol_name(Protocol p);
Protocol parse_protocol(const std::string& name);

// Everything that determines a run. The resolved form (see to_json) is
// written next to every run's outputs and reproduces it exactly.
struct RunConfig {
  // [experiment]
  std::string protocol = "timelyfl";
  std::int64_t rounds = 200;
  std::int64_t concurrency = 64;
  std::int64_t aggregation_target = 0;  // k or K; 0 = ceil(concurrency / 2)
  std::int64_t seed = 1;
  std::string output_dir = "out";
  std::int64_t eval_every = 1;
  double stop_at_accuracy = 0.0;  // 0 = run all rounds
  std::string targets;            // comma-separated accuracies for compare

  // [data]
  std::string dataset = "synthetic";  // synthetic | csv
  std::string csv_path;
  std::string label_column = "label";
  double test_fraction = 0.2;  // csv only
  std::int64_t class_count = 10;
  std::int64_t feature_dim = 16;
  std::int64_t samples_per_class = 1000;
  double data_alpha = 0.1;

  // [model]
  std::string hidden_layers = "128,16";

  // [client]
  double client_lr = 0.03;
  std::int64_t batch_size = 4;
  std::int64_t local_epochs = 1;  // sync and fedbuff

  // [server]
  std::string aggregator = "fedavg";
  double server_lr = 0.03;  // fedopt only; fedavg applies the mean delta as is
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::int64_t staleness_cap = 10;

  // [population]
  std::int64_t client_count = 64;
  std::string trace_path;
  double heterogeneity_ratio = 13.3;
  double min_compute_s = 0.5;
  double bandwidth_spread = 200.0;
  double min_bandwidth_bps = 2000.0;
  std::int64_t bandwidth_samples = 8;
  double bytes_per_param = 4.0;
  double noise_eta = 0.0;
  bool disturbance = true;

  Protocol protocol_kind() const { return parse_protocol(protocol); }
  std::vector<std::size_t> hidden_dims() const;
  std::vector<double> target_list() const;
};

using ConfigMember = std::variant<std::string RunConfig::*, std::int64_t RunConfig::*,
                                  double RunConfig::*, bool RunConfig::*>;

struct ConfigKey {
  const char* section;
  const char* name;
  ConfigMember member;
  const char* help;
};

// Every key, in file order. Key names are unique across sections.
const std::vector<ConfigKey>& config_keys();

// Reads {"section": {"key": value, ...}, ...}. Unknown sections or keys,
// and values of the wrong type, raise ValidationError.
void merge_json(RunConfig& config, const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

// Sets one key from its textual form (as given on the command line).
void set_value(RunConfig& config, const std::string& key, const std::string& value);

// Fills derived defaults (aggregation_target) and checks every invariant.
// Throws ValidationError naming the offending key.
void resolve(RunConfig& config);

nlohmann::json to_json(const RunConfig& config);

}  // namespace timelyfl

#endif  // TIMELYFL_CONFIG_H_
