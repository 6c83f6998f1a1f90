#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.h"
#include "timelyfl/errors.h"
#include "timelyfl/experiment.h"

namespace timelyfl {
namespace {

namespace fs = std::filesystem;

const char* kSmallFlags =
    " --rounds 4 --client_count 8 --concurrency 8 --samples_per_class 30"
    " --feature_dim 4 --class_count 3 --hidden_layers 6";

std::string cli() {
  const char* p = std::getenv("TIMELYFL_CLI");
  REQUIRE_MESSAGE(p != nullptr, "TIMELYFL_CLI is not set");
  return p;
}

int run_cli(const std::string& args) {
  const int status = std::system((cli() + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RunConfig small_config() {
  RunConfig c;
  c.rounds = 3;
  c.client_count = 6;
  c.concurrency = 6;
  c.samples_per_class = 30;
  c.feature_dim = 4;
  c.class_count = 3;
  c.hidden_layers = "6";
  resolve(c);
  return c;
}

}  // namespace

TEST_CASE("run_experiment: writes every artifact") {
  testing::TempDir dir("exp");
  RunConfig c = small_config();
  run_experiment(c, dir.path());
  for (const char* f : {"runlog.csv", "participation.csv", "curve.csv", "schedule.csv",
                        "final_model.ckpt", "resolved_config.json", "manifest.json"}) {
    CHECK_MESSAGE(fs::exists(dir / f), f);
  }
}

TEST_CASE("prepare_inputs: missing files fail before any work") {
  RunConfig c = small_config();
  c.trace_path = "/nonexistent/traces.csv";
  CHECK_THROWS_AS(prepare_inputs(c), IoError);
  c.trace_path.clear();
  c.dataset = "csv";
  c.csv_path = "/nonexistent/data.csv";
  CHECK_THROWS_AS(prepare_inputs(c), IoError);
}

TEST_CASE("prepare_inputs: trace population must match client_count") {
  testing::TempDir dir("exp");
  testing::write_file(dir / "t.csv", "client_id,t,bw\n0,1,100\n1,2,200\n");
  RunConfig c = small_config();
  c.trace_path = (dir / "t.csv").string();
  CHECK_THROWS_AS(prepare_inputs(c), ValidationError);
  c.client_count = 2;
  c.concurrency = 2;
  c.aggregation_target = 1;
  CHECK(prepare_inputs(c).population.size() == 2);
}

TEST_CASE("output_dir: environment overrides the config") {
  RunConfig c = small_config();
  c.output_dir = "from-config";
  ::unsetenv(kOutputDirEnv);
  CHECK(output_dir(c) == fs::path("from-config"));
  ::setenv(kOutputDirEnv, "/tmp/from-env", 1);
  CHECK(output_dir(c) == fs::path("/tmp/from-env"));
  ::unsetenv(kOutputDirEnv);
}

TEST_CASE("cli: re-running a config gives byte-identical CSVs") {
  testing::TempDir dir("cli");
  for (const char* protocol : {"timelyfl", "fedbuff"}) {
    CAPTURE(protocol);
    const std::string common = std::string(" --protocol ") + protocol + kSmallFlags;
    REQUIRE(run_cli("run --output_dir " + (dir / "a").string() + common) == 0);
    REQUIRE(run_cli("run --output_dir " + (dir / "b").string() + common) == 0);
    for (const char* f : {"runlog.csv", "participation.csv", "curve.csv", "schedule.csv"}) {
      CHECK(testing::read_file(dir / "a" / f) == testing::read_file(dir / "b" / f));
    }
  }
}

TEST_CASE("cli: compare writes one comparison table") {
  testing::TempDir dir("cli");
  REQUIRE(run_cli("compare --output_dir " + dir.path().string() + kSmallFlags) == 0);
  const std::string table = testing::read_file(dir / "comparison.csv");
  CHECK(table.rfind("strategy,target,time_s,ratio\n", 0) == 0);
  for (const char* s : {"\nsync,", "\nfedbuff,", "\ntimelyfl,"}) CHECK(table.find(s) != std::string::npos);
  CHECK(fs::exists(dir / "timelyfl" / "runlog.csv"));
}

TEST_CASE("cli: exit codes") {
  testing::TempDir dir("cli");
  const fs::path out = dir / "out";
  CHECK(run_cli("run --output_dir " + out.string() + " --trace_path /nonexistent.csv" +
                kSmallFlags) == 2);
  CHECK_FALSE(fs::exists(out));
  CHECK(run_cli("run --output_dir " + out.string() + " --aggregation_target 99" + kSmallFlags) ==
        1);
  CHECK(run_cli("run --no-such-flag 1") == 1);
  testing::write_file(dir / "bad.json", "{\"experiment\": {\"seed\": 2, \"bogus\": 1}}");
  CHECK(run_cli("run -c " + (dir / "bad.json").string()) == 1);
}

}  // namespace timelyfl
