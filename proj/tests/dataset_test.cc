#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.h"
#include "timelyfl/dataset.h"
#include "timelyfl/errors.h"

namespace timelyfl {
namespace {

std::size_t total_size(const std::vector<DataShard>& shards) {
  std::size_t n = 0;
  for (const auto& s : shards) n += s.size();
  return n;
}

double mean_entropy(double alpha, std::uint64_t seed) {
  SyntheticData d = generate_synthetic(10, 2, 200, seed);
  auto shards = partition_dirichlet(d.train, {8, alpha, seed});
  double sum = 0.0;
  for (const auto& s : shards) sum += label_entropy(s, 10);
  return sum / static_cast<double>(shards.size());
}

}  // namespace

TEST_CASE("generate_synthetic: sizes") {
  SyntheticData d = generate_synthetic(10, 4, 100, 1);
  CHECK(d.train.size() + d.test.size() == 1000);
  CHECK(d.test.size() == 200);
  CHECK(d.train.size() == 800);
  CHECK(d.train.feature_dim() == 4);
  CHECK(d.train.class_count == 10);
  for (int c = 0; c < 10; ++c) {
    CHECK(std::count(d.test.labels.begin(), d.test.labels.end(), c) == 20);
  }
}

TEST_CASE("generate_synthetic: deterministic per seed") {
  SyntheticData a = generate_synthetic(3, 5, 40, 9);
  SyntheticData b = generate_synthetic(3, 5, 40, 9);
  CHECK(a.train.features == b.train.features);
  CHECK(a.test.features == b.test.features);
  CHECK(a.train.labels == b.train.labels);
  CHECK_FALSE(a.train.features == generate_synthetic(3, 5, 40, 10).train.features);
}

TEST_CASE("partition_dirichlet: disjoint cover with nonempty shards") {
  SyntheticData d = generate_synthetic(10, 2, 50, 3);
  for (double alpha : {0.01, 0.1, 1.0, 100.0}) {
    CAPTURE(alpha);
    auto shards = partition_dirichlet(d.train, {16, alpha, 3});
    REQUIRE(shards.size() == 16);
    CHECK(total_size(shards) == d.train.size());
    std::multiset<std::vector<double>> rows;
    for (std::size_t k = 0; k < shards.size(); ++k) {
      CHECK(shards[k].client_id == static_cast<int>(k));
      CHECK(shards[k].size() >= 1);
      for (std::size_t i = 0; i < shards[k].size(); ++i) {
        auto r = shards[k].features.row(i);
        rows.emplace(r.begin(), r.end());
      }
    }
    std::multiset<std::vector<double>> all;
    for (std::size_t i = 0; i < d.train.size(); ++i) {
      auto r = d.train.features.row(i);
      all.emplace(r.begin(), r.end());
    }
    CHECK(rows == all);
  }
}

TEST_CASE("partition_dirichlet: huge alpha is near uniform") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SyntheticData d = generate_synthetic(5, 2, 250, seed);
    auto shards = partition_dirichlet(d.train, {4, 1e6, seed});
    for (const auto& s : shards) {
      for (int c = 0; c < 5; ++c) {
        const double share =
            static_cast<double>(std::count(s.labels.begin(), s.labels.end(), c)) / 200.0;
        CHECK(std::abs(share - 0.25) <= 0.2 * 0.25);
      }
    }
  }
}

TEST_CASE("partition_dirichlet: small alpha lowers label entropy") {
  double low = 0.0, high = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    low += mean_entropy(0.1, seed);
    high += mean_entropy(1e6, seed);
  }
  CHECK(low < high);
}

TEST_CASE("partition_dirichlet: more clients than samples") {
  SyntheticData d = generate_synthetic(2, 2, 5, 1);
  CHECK_THROWS_AS(partition_dirichlet(d.train, {d.train.size() + 1, 1.0, 1}),
                  StructuralError);
}

TEST_CASE("label_entropy: single class is zero, uniform is ln C") {
  DataShard one{Matrix(3, 1), {2, 2, 2}, 0};
  CHECK(label_entropy(one, 4) == 0.0);
  DataShard even{Matrix(4, 1), {0, 1, 2, 3}, 0};
  CHECK(label_entropy(even, 4) == doctest::Approx(std::log(4.0)));
}

TEST_CASE("load_csv: direct parse") {
  testing::TempDir dir("csv");
  testing::write_file(dir / "a.csv", "f0,f1,label\n1,2,0\n3.5,-4,1\n0,0,1\n");
  CsvDataset c = load_csv(dir / "a.csv", {});
  CHECK(c.dataset.size() == 3);
  CHECK(c.dataset.feature_dim() == 2);
  CHECK(c.dataset.class_count == 2);
  CHECK(c.dataset.features(1, 0) == 3.5);
  CHECK(c.dataset.labels == std::vector<int>{0, 1, 1});
  CHECK(c.feature_names == std::vector<std::string>{"f0", "f1"});
}

TEST_CASE("load_csv: sparse labels are densified") {
  testing::TempDir dir("csv");
  testing::write_file(dir / "a.csv", "y,x\n9,1\n5,2\n9,3\n");
  CsvDataset c = load_csv(dir / "a.csv", {"y"});
  CHECK(c.dataset.labels == std::vector<int>{1, 0, 1});
  CHECK(c.original_labels == std::vector<long long>{5, 9});
  CHECK(c.dataset.class_count == 2);
}

TEST_CASE("load_csv: bad cell names the row") {
  testing::TempDir dir("csv");
  testing::write_file(dir / "a.csv", "x,label\n1,0\nabc,1\n");
  try {
    load_csv(dir / "a.csv", {});
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  testing::write_file(dir / "b.csv", "x,label\n1,0,7\n");
  CHECK_THROWS_AS(load_csv(dir / "b.csv", {}), ParseError);
  CHECK_THROWS_AS(load_csv(dir / "none.csv", {}), IoError);
}

TEST_CASE("dump_csv then load_csv reproduces the dataset") {
  testing::TempDir dir("csv");
  SyntheticData d = generate_synthetic(3, 4, 10, 2);
  dump_csv(dir / "d.csv", d.train, {});
  CsvDataset back = load_csv(dir / "d.csv", {});
  CHECK(back.dataset.features == d.train.features);
  CHECK(back.dataset.labels == d.train.labels);
}

TEST_CASE("split_train_test: per-class floor") {
  SyntheticData d = generate_synthetic(4, 2, 25, 1);  // 20 train per class
  SyntheticData s = split_train_test(d.train, 0.25, 7);
  CHECK(s.test.size() == 20);
  CHECK(s.train.size() == 60);
  CHECK_THROWS_AS(split_train_test(d.train, 1.0, 7), ValidationError);
}

}  // namespace timelyfl
