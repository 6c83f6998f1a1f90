#include "timelyfl/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "timelyfl/errors.h"
#include "timelyfl/rng.h"

namespace timelyfl {

namespace {

constexpr double kClusterStddev = 0.3;

Dataset subset(const Dataset& src, std::span<const std::size_t> idx) {
  Dataset out;
  out.class_count = src.class_count;
  out.features = gather_rows(src.features, idx);
  out.labels.reserve(idx.size());
  for (std::size_t i : idx) out.labels.push_back(src.labels[i]);
  return out;
}

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& ds) {
  std::vector<std::vector<std::size_t>> by_class(ds.class_count);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class.at(static_cast<std::size_t>(ds.labels[i])).push_back(i);
  }
  return by_class;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

SyntheticData generate_synthetic(std::size_t class_count, std::size_t feature_dim,
                                 std::size_t samples_per_class, std::uint64_t seed) {
  if (class_count == 0 || feature_dim == 0 || samples_per_class == 0) {
    throw ValidationError("synthetic dataset parameters must all be >= 1");
  }
  const std::size_t test_per_class = samples_per_class / 5;
  const std::size_t train_per_class = samples_per_class - test_per_class;

  SyntheticData data;
  data.train.class_count = data.test.class_count = class_count;
  data.train.features = Matrix(train_per_class * class_count, feature_dim);
  data.test.features = Matrix(test_per_class * class_count, feature_dim);

  for (std::size_t c = 0; c < class_count; ++c) {
    RngStream rng(seed, Purpose::kSyntheticData, c);
    std::vector<double> mean(feature_dim);
    for (double& m : mean) m = rng.uniform(-1.0, 1.0);
    std::normal_distribution<double> noise(0.0, kClusterStddev);
    for (std::size_t s = 0; s < samples_per_class; ++s) {
      const bool to_test = s < test_per_class;
      Dataset& dst = to_test ? data.test : data.train;
      const std::size_t row =
          to_test ? c * test_per_class + s : c * train_per_class + (s - test_per_class);
      auto x = dst.features.row(row);
      for (std::size_t d = 0; d < feature_dim; ++d) x[d] = mean[d] + noise(rng);
    }
  }
  for (std::size_t c = 0; c < class_count; ++c) {
    data.test.labels.insert(data.test.labels.end(), test_per_class, static_cast<int>(c));
    data.train.labels.insert(data.train.labels.end(), train_per_class, static_cast<int>(c));
  }
  return data;
}

std::vector<DataShard> partition_dirichlet(const Dataset& dataset,
                                           const PartitionSpec& spec) {
  if (dataset.size() == 0) throw StructuralError("cannot partition an empty dataset");
  if (spec.client_count == 0) throw ValidationError("client_count must be >= 1");
  if (!(spec.data_alpha > 0.0)) throw ValidationError("data_alpha must be > 0");
  if (spec.client_count > dataset.size()) {
    throw StructuralError("client_count " + std::to_string(spec.client_count) +
                          " exceeds training-set size " + std::to_string(dataset.size()));
  }

  std::vector<std::vector<std::size_t>> assigned(spec.client_count);
  auto by_class = indices_by_class(dataset);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.empty()) continue;
    RngStream order(spec.seed, Purpose::kPartition, c, 0);
    std::shuffle(idx.begin(), idx.end(), order);

    RngStream draw(spec.seed, Purpose::kPartition, c, 1);
    std::gamma_distribution<double> gamma(spec.data_alpha, 1.0);
    std::vector<double> share(spec.client_count);
    double total = 0.0;
    for (double& p : share) {
      p = gamma(draw);
      total += p;
    }
    if (!(total > 0.0)) {
      // Every gamma draw underflowed; fall back to one random recipient.
      std::fill(share.begin(), share.end(), 0.0);
      share[draw.below(spec.client_count)] = 1.0;
      total = 1.0;
    }

    // Cumulative floor keeps counts summing exactly to the class size.
    const double n = static_cast<double>(idx.size());
    double cumulative = 0.0;
    std::size_t begin = 0;
    for (std::size_t k = 0; k < spec.client_count; ++k) {
      cumulative += share[k];
      std::size_t end = k + 1 == spec.client_count
                            ? idx.size()
                            : std::min(idx.size(), static_cast<std::size_t>(
                                                       std::floor(n * cumulative / total)));
      end = std::max(end, begin);
      assigned[k].insert(assigned[k].end(), idx.begin() + begin, idx.begin() + end);
      begin = end;
    }
  }

  // Repair: each empty shard takes one sample from the currently largest.
  for (std::size_t k = 0; k < assigned.size(); ++k) {
    if (!assigned[k].empty()) continue;
    auto donor = std::max_element(
        assigned.begin(), assigned.end(),
        [](const auto& a, const auto& b) { return a.size() < b.size(); });
    assigned[k].push_back(donor->back());
    donor->pop_back();
  }

  std::vector<DataShard> shards;
  shards.reserve(spec.client_count);
  for (std::size_t k = 0; k < assigned.size(); ++k) {
    std::sort(assigned[k].begin(), assigned[k].end());
    Dataset part = subset(dataset, assigned[k]);
    shards.push_back(DataShard{std::move(part.features), std::move(part.labels),
                               static_cast<int>(k)});
  }
  return shards;
}

SyntheticData split_train_test(const Dataset& dataset, double test_fraction,
                               std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0) {
    throw ValidationError("test fraction must be in [0, 1)");
  }
  std::vector<std::size_t> train_idx, test_idx;
  auto by_class = indices_by_class(dataset);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    RngStream rng(seed, Purpose::kSplit, c);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_test =
        static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(idx.size())));
    test_idx.insert(test_idx.end(), idx.begin(), idx.begin() + n_test);
    train_idx.insert(train_idx.end(), idx.begin() + n_test, idx.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {subset(dataset, train_idx), subset(dataset, test_idx)};
}

CsvDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header row", 1);
  ++line_no;
  auto header = split_commas(line);
  std::size_t label_col = header.size();
  CsvDataset result;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == schema.label_column) {
      label_col = i;
    } else {
      result.feature_names.emplace_back(header[i]);
    }
  }
  if (label_col == header.size()) {
    throw ParseError(path.string() + ": header has no column named '" +
                         schema.label_column + "'",
                     1);
  }
  const std::size_t feature_dim = header.size() - 1;
  if (feature_dim == 0) throw ParseError(path.string() + ": no feature columns", 1);

  std::vector<double> values;
  std::vector<long long> raw_labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                           std::to_string(header.size()) + " columns, found " +
                           std::to_string(cells.size()),
                       line_no);
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto cell = cells[i];
      const char* end = cell.data() + cell.size();
      if (i == label_col) {
        long long label = 0;
        auto [ptr, ec] = std::from_chars(cell.data(), end, label);
        if (ec != std::errc() || ptr != end) {
          throw ParseError(path.string() + ":" + std::to_string(line_no) +
                               ": label '" + std::string(cell) + "' is not an integer",
                           line_no);
        }
        raw_labels.push_back(label);
      } else {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(cell.data(), end, v);
        if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
          throw ParseError(path.string() + ":" + std::to_string(line_no) +
                               ": feature '" + std::string(cell) + "' is not numeric",
                           line_no);
        }
        values.push_back(v);
      }
    }
  }
  if (raw_labels.empty()) throw ParseError(path.string() + ": no data rows", line_no);

  std::map<long long, int> dense;
  for (long long l : raw_labels) dense.emplace(l, 0);
  int next = 0;
  for (auto& [orig, d] : dense) {
    d = next++;
    result.original_labels.push_back(orig);
  }
  Dataset& ds = result.dataset;
  ds.features = Matrix(raw_labels.size(), feature_dim, std::move(values));
  ds.class_count = dense.size();
  for (long long l : raw_labels) ds.labels.push_back(dense[l]);
  return result;
}

void dump_csv(const std::filesystem::path& path, const Dataset& dataset,
              const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset " + path.string());
  for (std::size_t d = 0; d < dataset.feature_dim(); ++d) out << "x" << d << ",";
  out << schema.label_column << "\n";
  char buf[40];
  for (std::size_t s = 0; s < dataset.size(); ++s) {
    for (double v : dataset.features.row(s)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ",";
    }
    out << dataset.labels[s] << "\n";
  }
  if (!out) throw IoError("write failed for " + path.string());
}

double label_entropy(const DataShard& shard, std::size_t class_count) {
  if (shard.size() == 0) return 0.0;
  std::vector<double> counts(class_count, 0.0);
  for (int y : shard.labels) counts.at(static_cast<std::size_t>(y)) += 1.0;
  double h = 0.0;
  const double n = static_cast<double>(shard.size());
  for (double c : counts) {
    if (c > 0.0) h -= (c / n) * std::log(c / n);
  }
  return h;
}

}  // namespace timelyfl
