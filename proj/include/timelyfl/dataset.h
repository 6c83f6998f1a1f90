#ifndef TIMELYFL_DATASET_H_
#define TIMELYFL_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "timelyfl/matrix.h"

namespace timelyfl {

struct Dataset {
  Matrix features;  // n_samples x feature_dim
  std::vector<int> labels;
  std::size_t class_count = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_dim() const { return features.cols(); }
};

struct SyntheticData {
  Dataset train;
  Dataset test;
};

struct DataShard {
  Matrix features;
  std::vector<int> labels;
  int client_id = -1;

  std::size_t size() const { return labels.size(); }
};

struct PartitionSpec {
  std::size_t client_count = 1;
  double data_alpha = 0.1;  // Dirichlet concentration
  std::uint64_t seed = 0;
};

// Gaussian class clusters: mean ~ U[-1,1]^d per class, samples ~
// N(mean, 0.3^2 I). A fifth of every class goes to the test split.
SyntheticData generate_synthetic(std::size_t class_count, std::size_t feature_dim,
                                 std::size_t samples_per_class, std::uint64_t seed);

// Per class, client proportions ~ Dirichlet(data_alpha * 1). Every shard
// ends up nonempty.
std::vector<DataShard> partition_dirichlet(const Dataset& dataset,
                                           const PartitionSpec& spec);

// Deterministic split: `test_fraction` of each class (rounded down) goes to
// the test set.
SyntheticData split_train_test(const Dataset& dataset, double test_fraction,
                               std::uint64_t seed);

struct CsvSchema {
  std::string label_column = "label";
};

struct CsvDataset {
  Dataset dataset;
  // original_labels[dense] = label as written in the file.
  std::vector<long long> original_labels;
  std::vector<std::string> feature_names;
};

// Header row required. Non-label columns must be numeric features. Labels
// are relabeled densely in ascending order of their original value.
CsvDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
void dump_csv(const std::filesystem::path& path, const Dataset& dataset,
              const CsvSchema& schema);

// Shannon entropy (nats) of a shard's label histogram.
double label_entropy(const DataShard& shard, std::size_t class_count);

}  // namespace timelyfl

#endif  // TIMELYFL_DATASET_H_
