#include "timelyfl/config.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "timelyfl/errors.h"

namespace timelyfl {

const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::kSync:
      return "sync";
    case Protocol::kFedBuff:
      return "fedbuff";
    case Protocol::kTimelyFl:
      return "timelyfl";
  }
  return "?";
}

Protocol parse_protocol(const std::string& name) {
  if (name == "sync") return Protocol::kSync;
  if (name == "fedbuff") return Protocol::kFedBuff;
  if (name == "timelyfl") return Protocol::kTimelyFl;
  throw ValidationError("protocol: unknown value '" + name +
                        "' (expected sync, fedbuff or timelyfl)");
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto b = item.find_first_not_of(" \t");
    auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError(key + ": '" + text + "' is not a valid number");
  }
  return v;
}

const ConfigKey& find_key(const std::string& name) {
  for (const auto& k : config_keys()) {
    if (name == k.name) return k;
  }
  throw ValidationError("unknown config key '" + name + "'");
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace

std::vector<std::size_t> RunConfig::hidden_dims() const {
  std::vector<std::size_t> dims;
  for (const auto& item : split_list(hidden_layers)) {
    auto v = parse_number<std::int64_t>("hidden_layers", item);
    require(v >= 1, "hidden_layers: widths must be >= 1");
    dims.push_back(static_cast<std::size_t>(v));
  }
  return dims;
}

std::vector<double> RunConfig::target_list() const {
  std::vector<double> out;
  for (const auto& item : split_list(targets)) {
    double v = parse_number<double>("targets", item);
    require(v > 0.0 && v <= 1.0, "targets: accuracies must be in (0, 1]");
    out.push_back(v);
  }
  return out;
}

const std::vector<ConfigKey>& config_keys() {
  using C = RunConfig;
  static const std::vector<ConfigKey> keys = {
      {"experiment", "protocol", &C::protocol, "sync | fedbuff | timelyfl"},
      {"experiment", "rounds", &C::rounds, "communication rounds (aggregations for fedbuff)"},
      {"experiment", "concurrency", &C::concurrency, "clients training at once (n)"},
      {"experiment", "aggregation_target", &C::aggregation_target,
       "k for timelyfl, K for fedbuff; 0 = ceil(n/2)"},
      {"experiment", "seed", &C::seed, "master seed"},
      {"experiment", "output_dir", &C::output_dir, "output directory"},
      {"experiment", "eval_every", &C::eval_every, "evaluate every N aggregations"},
      {"experiment", "stop_at_accuracy", &C::stop_at_accuracy,
       "stop once test accuracy reaches this (0 = never)"},
      {"experiment", "targets", &C::targets, "comma-separated target accuracies"},
      {"data", "dataset", &C::dataset, "synthetic | csv"},
      {"data", "csv_path", &C::csv_path, "dataset CSV when dataset = csv"},
      {"data", "label_column", &C::label_column, "label column name in the CSV"},
      {"data", "test_fraction", &C::test_fraction, "held-out fraction for CSV data"},
      {"data", "class_count", &C::class_count, "synthetic classes"},
      {"data", "feature_dim", &C::feature_dim, "synthetic feature dimension"},
      {"data", "samples_per_class", &C::samples_per_class, "synthetic samples per class"},
      {"data", "data_alpha", &C::data_alpha, "Dirichlet concentration of the partition"},
      {"model", "hidden_layers", &C::hidden_layers, "comma-separated hidden widths"},
      {"client", "client_lr", &C::client_lr, "client SGD learning rate"},
      {"client", "batch_size", &C::batch_size, "client batch size"},
      {"client", "local_epochs", &C::local_epochs, "epochs per task for sync/fedbuff"},
      {"server", "aggregator", &C::aggregator, "fedavg | fedopt"},
      {"server", "server_lr", &C::server_lr, "server Adam learning rate (fedopt)"},
      {"server", "beta1", &C::beta1, "server Adam beta1"},
      {"server", "beta2", &C::beta2, "server Adam beta2"},
      {"server", "adam_eps", &C::adam_eps, "server Adam epsilon"},
      {"server", "staleness_cap", &C::staleness_cap, "fedbuff: drop updates staler than this"},
      {"population", "client_count", &C::client_count, "number of devices / data shards"},
      {"population", "trace_path", &C::trace_path, "device trace CSV (overrides synthesis)"},
      {"population", "heterogeneity_ratio", &C::heterogeneity_ratio,
       "slowest/fastest base compute"},
      {"population", "min_compute_s", &C::min_compute_s, "fastest per-batch compute (s)"},
      {"population", "bandwidth_spread", &C::bandwidth_spread, "best/worst bandwidth"},
      {"population", "min_bandwidth_bps", &C::min_bandwidth_bps, "worst bandwidth (B/s)"},
      {"population", "bandwidth_samples", &C::bandwidth_samples,
       "bandwidth samples per synthetic device"},
      {"population", "bytes_per_param", &C::bytes_per_param, "upload bytes per parameter"},
      {"population", "noise_eta", &C::noise_eta, "intra-round compute noise half-width"},
      {"population", "disturbance", &C::disturbance, "per-round availability coefficient on/off"},
  };
  return keys;
}

void merge_json(RunConfig& config, const nlohmann::json& doc) {
  require(doc.is_object(), "config root must be an object");
  for (const auto& [section, body] : doc.items()) {
    require(body.is_object(), "config section '" + section + "' must be an object");
    require(std::any_of(config_keys().begin(), config_keys().end(),
                        [&](const ConfigKey& k) { return section == k.section; }),
            "unknown config section '" + section + "'");
    for (const auto& [name, value] : body.items()) {
      const ConfigKey& key = find_key(name);
      require(section == key.section, "config key '" + name + "' belongs in section '" +
                                          key.section + "', not '" + section + "'");
      std::visit(
          [&](auto member) {
            using T = std::remove_reference_t<decltype(config.*member)>;
            if constexpr (std::is_same_v<T, std::string>) {
              require(value.is_string(), name + ": expected a string");
            } else if constexpr (std::is_same_v<T, bool>) {
              require(value.is_boolean(), name + ": expected true or false");
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
              require(value.is_number_integer(), name + ": expected an integer");
            } else {
              require(value.is_number(), name + ": expected a number");
            }
            config.*member = value.get<T>();
          },
          key.member);
    }
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  RunConfig config;
  merge_json(config, doc);
  return config;
}

void set_value(RunConfig& config, const std::string& name, const std::string& text) {
  const ConfigKey& key = find_key(name);
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(config.*member)>;
        if constexpr (std::is_same_v<T, std::string>) {
          config.*member = text;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (text == "true" || text == "1" || text == "on") {
            config.*member = true;
          } else if (text == "false" || text == "0" || text == "off") {
            config.*member = false;
          } else {
            throw ValidationError(name + ": expected true or false, got '" + text + "'");
          }
        } else {
          config.*member = parse_number<T>(name, text);
        }
      },
      key.member);
}

void resolve(RunConfig& c) {
  parse_protocol(c.protocol);
  require(c.aggregator == "fedavg" || c.aggregator == "fedopt",
          "aggregator: expected fedavg or fedopt, got '" + c.aggregator + "'");
  require(c.dataset == "synthetic" || c.dataset == "csv",
          "dataset: expected synthetic or csv, got '" + c.dataset + "'");
  require(c.dataset != "csv" || !c.csv_path.empty(), "csv_path: required when dataset = csv");
  require(c.rounds >= 0, "rounds: must be >= 0");
  require(c.concurrency >= 1, "concurrency: must be >= 1");
  require(c.client_count >= 1, "client_count: must be >= 1");
  require(c.concurrency <= c.client_count,
          "concurrency: " + std::to_string(c.concurrency) + " exceeds population size " +
              std::to_string(c.client_count));
  if (c.aggregation_target == 0) {
    c.aggregation_target = (c.concurrency + 1) / 2;
  }
  require(c.aggregation_target >= 1 && c.aggregation_target <= c.concurrency,
          "aggregation_target: must be in [1, concurrency], got " +
              std::to_string(c.aggregation_target));
  require(c.eval_every >= 1, "eval_every: must be >= 1");
  require(c.stop_at_accuracy >= 0.0 && c.stop_at_accuracy <= 1.0,
          "stop_at_accuracy: must be in [0, 1]");
  c.target_list();
  require(c.test_fraction > 0.0 && c.test_fraction < 1.0, "test_fraction: must be in (0, 1)");
  require(c.class_count >= 1 && c.feature_dim >= 1 && c.samples_per_class >= 1,
          "class_count, feature_dim, samples_per_class: must be >= 1");
  require(c.data_alpha > 0.0, "data_alpha: must be > 0");
  c.hidden_dims();
  require(c.client_lr > 0.0, "client_lr: must be > 0");
  require(c.batch_size >= 1, "batch_size: must be >= 1");
  require(c.local_epochs >= 1, "local_epochs: must be >= 1");
  require(c.server_lr > 0.0, "server_lr: must be > 0");
  require(c.beta1 >= 0.0 && c.beta1 < 1.0, "beta1: must be in [0, 1)");
  require(c.beta2 >= 0.0 && c.beta2 < 1.0, "beta2: must be in [0, 1)");
  require(c.adam_eps > 0.0, "adam_eps: must be > 0");
  require(c.staleness_cap >= 0, "staleness_cap: must be >= 0");
  require(c.heterogeneity_ratio >= 1.0, "heterogeneity_ratio: must be >= 1");
  require(c.bandwidth_spread >= 1.0, "bandwidth_spread: must be >= 1");
  require(c.min_compute_s > 0.0, "min_compute_s: must be > 0");
  require(c.min_bandwidth_bps > 0.0, "min_bandwidth_bps: must be > 0");
  require(c.bandwidth_samples >= 1, "bandwidth_samples: must be >= 1");
  require(c.bytes_per_param > 0.0, "bytes_per_param: must be > 0");
  require(c.noise_eta >= 0.0 && c.noise_eta < 1.0, "noise_eta: must be in [0, 1)");
}

nlohmann::json to_json(const RunConfig& config) {
  nlohmann::json doc;
  for (const auto& key : config_keys()) {
    std::visit([&](auto member) { doc[key.section][key.name] = config.*member; }, key.member);
  }
  return doc;
}

}  // namespace timelyfl
