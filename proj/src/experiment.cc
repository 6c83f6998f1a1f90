#include "timelyfl/experiment.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "timelyfl/checkpoint.h"
#include "timelyfl/errors.h"
#include "timelyfl/text.h"

namespace timelyfl {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void make_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  auto out = open_out(path);
  out << doc.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<DeviceProfile> load_population(const RunConfig& config) {
  if (config.trace_path.empty()) {
    PopulationSpec spec;
    spec.client_count = static_cast<std::size_t>(config.client_count);
    spec.heterogeneity_ratio = config.heterogeneity_ratio;
    spec.min_compute_s = config.min_compute_s;
    spec.bandwidth_spread = config.bandwidth_spread;
    spec.min_bandwidth_bps = config.min_bandwidth_bps;
    spec.bandwidth_samples_per_client = static_cast<std::size_t>(config.bandwidth_samples);
    spec.seed = static_cast<std::uint64_t>(config.seed);
    return synth_population(spec);
  }
  auto profiles = load_traces(config.trace_path);
  std::sort(profiles.begin(), profiles.end(),
            [](const auto& a, const auto& b) { return a.client_id < b.client_id; });
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (profiles[i].client_id != static_cast<int>(i)) {
      throw ValidationError("trace_path: client ids must be 0..N-1 without gaps");
    }
  }
  if (profiles.size() != static_cast<std::size_t>(config.client_count)) {
    throw ValidationError("client_count is " + std::to_string(config.client_count) +
                          " but the trace file lists " + std::to_string(profiles.size()) +
                          " devices");
  }
  return profiles;
}

}  // namespace

ExperimentInputs prepare_inputs(const RunConfig& config) {
  if (!config.trace_path.empty() && !std::filesystem::exists(config.trace_path)) {
    throw IoError("trace file not found: " + config.trace_path);
  }
  if (config.dataset == "csv" && !std::filesystem::exists(config.csv_path)) {
    throw IoError("dataset file not found: " + config.csv_path);
  }
  const auto seed = static_cast<std::uint64_t>(config.seed);
  ExperimentInputs in;
  in.population = load_population(config);

  SyntheticData split;
  if (config.dataset == "csv") {
    CsvDataset csv = load_csv(config.csv_path, CsvSchema{config.label_column});
    split = split_train_test(csv.dataset, config.test_fraction, seed);
  } else {
    split = generate_synthetic(static_cast<std::size_t>(config.class_count),
                               static_cast<std::size_t>(config.feature_dim),
                               static_cast<std::size_t>(config.samples_per_class), seed);
  }
  if (split.test.size() == 0) throw ValidationError("test split is empty");
  PartitionSpec part;
  part.client_count = static_cast<std::size_t>(config.client_count);
  part.data_alpha = config.data_alpha;
  part.seed = seed;
  in.data.shards = partition_dirichlet(split.train, part);
  in.data.test = std::move(split.test);
  in.train = std::move(split.train);
  return in;
}

double oracle_accuracy(const ExperimentInputs& inputs, std::uint64_t seed) {
  const std::vector<std::size_t> dims{inputs.train.feature_dim(), inputs.train.class_count};
  CentralizedOptions opts;
  opts.seed = seed;
  LayeredModel linear = train_centralized(dims, inputs.train, opts);
  return evaluate(linear, inputs.data.test).accuracy;
}

std::filesystem::path output_dir(const RunConfig& config) {
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    return env;
  }
  return config.output_dir;
}

RunLog run_experiment(const RunConfig& config, const std::filesystem::path& dir) {
  ExperimentInputs inputs = prepare_inputs(config);
  return run_experiment(config, inputs, dir);
}

RunLog run_experiment(const RunConfig& config, const ExperimentInputs& inputs,
                      const std::filesystem::path& dir) {
  make_dir(dir);
  RunLog log = run(config, inputs.population, inputs.data);

  {
    auto out = open_out(dir / "runlog.csv");
    write_runlog_csv(out, log);
  }
  {
    auto out = open_out(dir / "participation.csv");
    write_participation_csv(out, participation(log, log.population_size));
  }
  {
    auto out = open_out(dir / "curve.csv");
    write_curve_csv(out, learning_curve(log));
  }
  {
    auto out = open_out(dir / "schedule.csv");
    write_schedule_csv(out, log);
  }
  save_checkpoint(dir / "final_model.ckpt", log.final_model);

  RunConfig snapshot = config;
  snapshot.output_dir = dir.string();
  write_json(dir / "resolved_config.json", to_json(snapshot));

  nlohmann::json manifest;
  manifest["tool"] = "timelyfl";
  manifest["version"] = kToolVersion;
  manifest["seed"] = config.seed;
  manifest["protocol"] = config.protocol;
  manifest["aggregator"] = config.aggregator;
  manifest["aggregations"] = log.aggregation_count();
  manifest["tasks"] = {{"spawned", log.tasks.spawned},
                       {"arrived", log.tasks.arrived},
                       {"late_dropped", log.tasks.late_dropped},
                       {"stale_discarded", log.tasks.stale_discarded},
                       {"unfinished", log.tasks.unfinished}};
  manifest["files"] = {"runlog.csv",      "participation.csv",    "curve.csv", "schedule.csv",
                       "final_model.ckpt", "resolved_config.json"};
  write_json(dir / "manifest.json", manifest);
  return log;
}

std::vector<ComparisonRow> run_comparison(const RunConfig& config,
                                          const std::filesystem::path& dir) {
  ExperimentInputs inputs = prepare_inputs(config);
  make_dir(dir);
  std::vector<double> targets = config.target_list();
  double oracle = 0.0;
  if (targets.empty()) {
    oracle = oracle_accuracy(inputs, static_cast<std::uint64_t>(config.seed));
    targets.push_back(0.8 * oracle);
  }

  std::vector<RunLog> logs;
  for (const char* protocol : {"sync", "fedbuff", "timelyfl"}) {
    RunConfig c = config;
    c.protocol = protocol;
    logs.push_back(run_experiment(c, inputs, dir / protocol));
  }
  std::vector<NamedRun> named;
  for (const auto& log : logs) named.push_back({log.protocol, &log});
  auto rows = compare(named, targets);
  {
    auto out = open_out(dir / "comparison.csv");
    write_comparison_csv(out, rows);
  }
  nlohmann::json manifest;
  manifest["tool"] = "timelyfl";
  manifest["version"] = kToolVersion;
  manifest["seed"] = config.seed;
  manifest["targets"] = targets;
  if (oracle > 0.0) manifest["oracle_accuracy"] = oracle;
  manifest["protocols"] = {"sync", "fedbuff", "timelyfl"};
  write_json(dir / "manifest.json", manifest);
  return rows;
}

void run_sweep(const RunConfig& config, const std::string& param,
               const std::vector<std::string>& values, const std::filesystem::path& dir) {
  if (param != "data_alpha" && param != "aggregation_target") {
    throw ValidationError("sweep: param must be data_alpha or aggregation_target");
  }
  if (values.empty()) throw ValidationError("sweep: no values given");
  std::vector<RunConfig> grid;
  for (const auto& v : values) {
    RunConfig c = config;
    set_value(c, param, v);
    resolve(c);
    grid.push_back(std::move(c));
  }
  make_dir(dir);
  auto out = open_out(dir / "sweep.csv");
  out << "param,value,strategy,target,time_s,ratio\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto rows = run_comparison(grid[i], dir / (param + "=" + values[i]));
    for (const auto& r : rows) {
      out << param << "," << values[i] << "," << r.strategy << "," << format_double(r.target)
          << "," << (r.time_s ? format_double(*r.time_s) : std::string("not-reached")) << ","
          << format_ratio(r.ratio) << "\n";
    }
  }
  if (!out) throw IoError("write failed for sweep.csv");
}

}  // namespace timelyfl
