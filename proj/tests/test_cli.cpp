// Integration tests driving the command-line binary end to end.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  const std::string cmd =
      (env_prefix.empty() ? "" : env_prefix + " ") + NSOPE_CLI_PATH + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult result;
  char buf[512];
  while (std::fgets(buf, sizeof buf, pipe)) result.output += buf;
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

struct TempDir {
  TempDir() {
    path = fs::temp_directory_path() /
           ("nsope_cli_" + std::to_string(std::rand()) + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  fs::path path;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) {
    if (c == '\n') ++n;
  }
  return n;
}

const char* kSineConfig = R"({
  "env": {
    "type": "sine_bandit",
    "num_contexts": 20, "num_actions": 3, "feature_dim": 4,
    "num_intervals": 5, "seed": 11,
    "target_policy": {"type": "softmax_mean_reward", "temperature": 0.3}
  },
  "experiment": {
    "samples_per_interval": 40, "num_runs": 2, "seed": 5
  },
  "estimators": [
    {"id": "is_b0", "kind": "is", "window": 0},
    {"id": "reg_b1", "kind": "reg", "window": 1, "features": "reg"}
  ]
})";

}  // namespace

TEST_CASE("gen-env writes one reward table per interval, deterministically") {
  const TempDir dir;
  write_file(dir.file("config.json"), kSineConfig);

  const CliResult r1 = run_cli("gen-env --config " + dir.file("config.json") + " --out " +
                               dir.file("env1"));
  CHECK(r1.exit_code == 0);
  CHECK(r1.output.find("5 reward tables") != std::string::npos);
  for (int k = 0; k < 5; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "env1/rewards_%03d.json", k);
    CHECK(fs::exists(dir.file(name)));
  }
  CHECK(fs::exists(dir.file("env1/population.json")));
  CHECK(fs::exists(dir.file("env1/target_policy.json")));

  const CliResult r2 = run_cli("gen-env --config " + dir.file("config.json") + " --out " +
                               dir.file("env2"));
  CHECK(r2.exit_code == 0);
  CHECK(slurp(dir.file("env1/rewards_003.json")) == slurp(dir.file("env2/rewards_003.json")));
  CHECK(slurp(dir.file("env1/population.json")) == slurp(dir.file("env2/population.json")));

  CHECK(run_cli("gen-env --config " + dir.file("nope.json") + " --out " + dir.file("x"))
            .exit_code == 2);
}

TEST_CASE("convert builds a population from a multilabel file") {
  const TempDir dir;
  write_file(dir.file("toy.txt"),
             "0 0:1.0 2:0.5\n"
             "1 1:1.0\n"
             "0,1 0:0.2 1:0.2\n");
  const CliResult ok =
      run_cli("convert --input " + dir.file("toy.txt") + " --out " + dir.file("conv") +
              " --actions 2 --subset-frac 1.0");
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("3 contexts") != std::string::npos);
  CHECK(fs::exists(dir.file("conv/population.json")));
  CHECK(fs::exists(dir.file("conv/target_policy.json")));
  CHECK(fs::exists(dir.file("conv/base_rewards.json")));

  write_file(dir.file("bad.txt"), "0 1:1.0\n0 3:0.5 2:0.5\n");
  const CliResult bad = run_cli("convert --input " + dir.file("bad.txt") + " --out " +
                                dir.file("conv2") + " --actions 2");
  CHECK(bad.exit_code == 3);
  CHECK(bad.output.find("line 2") != std::string::npos);

  write_file(dir.file("range.txt"), "9 1:1.0\n");
  CHECK(run_cli("convert --input " + dir.file("range.txt") + " --out " + dir.file("conv3") +
                " --actions 2")
            .exit_code == 3);
}

TEST_CASE("run produces results and summary files and is reproducible") {
  const TempDir dir;
  write_file(dir.file("config.json"), kSineConfig);

  const CliResult r1 = run_cli("run --config " + dir.file("config.json") + " --out " +
                               dir.file("out1") + " --runs 1 --seed 7");
  CHECK(r1.exit_code == 0);
  CHECK(fs::exists(dir.file("out1/results.csv")));
  CHECK(fs::exists(dir.file("out1/results.json")));
  CHECK(fs::exists(dir.file("out1/summary.csv")));
  CHECK(fs::exists(dir.file("out1/summary.json")));
  // Two estimators: header + 2 summary rows.
  CHECK(count_lines(slurp(dir.file("out1/summary.csv"))) == 3);
  // 1 run x 4 scored intervals x 2 estimators.
  CHECK(count_lines(slurp(dir.file("out1/results.csv"))) == 1 + 8);

  const CliResult r2 = run_cli("run --config " + dir.file("config.json") + " --out " +
                               dir.file("out2") + " --runs 1 --seed 7 --workers 1");
  CHECK(r2.exit_code == 0);
  CHECK(slurp(dir.file("out1/results.csv")) == slurp(dir.file("out2/results.csv")));
  CHECK(slurp(dir.file("out1/summary.csv")) == slurp(dir.file("out2/summary.csv")));

  const CliResult logged = run_cli("run --config " + dir.file("config.json") + " --out " +
                                   dir.file("out_logged") + " --runs 1 --seed 7",
                                   "NONSTAT_OPE_LOG=info");
  CHECK(logged.exit_code == 0);
  CHECK(logged.output.find("[info]") != std::string::npos);
  CHECK(slurp(dir.file("out1/results.csv")) == slurp(dir.file("out_logged/results.csv")));

  write_file(dir.file("badestimator.json"), R"({
    "env": {"type": "sine_bandit", "num_contexts": 10, "num_actions": 2, "num_intervals": 3},
    "experiment": {"samples_per_interval": 10, "num_runs": 1},
    "estimators": [{"id": "x", "kind": "foo"}]
  })");
  const CliResult bad = run_cli("run --config " + dir.file("badestimator.json") + " --out " +
                                dir.file("out3"));
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("foo") != std::string::npos);
}

TEST_CASE("run works on the tree environment") {
  const TempDir dir;
  write_file(dir.file("tree.json"), R"({
    "env": {
      "type": "tree_mdp", "horizon": 4, "num_intervals": 4, "seed": 3,
      "target_policy": {"type": "softmax_optimal_q", "temperature": 1.0}
    },
    "experiment": {"trajectories_per_interval": 8, "num_runs": 2, "ci": "lower"},
    "estimators": [
      {"id": "traj_is", "kind": "traj_is", "window": 0},
      {"id": "reg_fqe", "kind": "reg_fqe", "window": 2}
    ]
  })");
  const CliResult r = run_cli("run --config " + dir.file("tree.json") + " --out " +
                              dir.file("treeout"));
  CHECK(r.exit_code == 0);
  CHECK(count_lines(slurp(dir.file("treeout/results.csv"))) == 1 + 2 * 3 * 2);
}

TEST_CASE("report prints one row per estimator") {
  const TempDir dir;
  write_file(dir.file("config.json"), kSineConfig);
  REQUIRE(run_cli("run --config " + dir.file("config.json") + " --out " + dir.file("out") +
                  " --runs 1")
              .exit_code == 0);

  const CliResult report = run_cli("report --results " + dir.file("out/results.csv"));
  CHECK(report.exit_code == 0);
  CHECK(report.output.find("is_b0") != std::string::npos);
  CHECK(report.output.find("reg_b1") != std::string::npos);
  CHECK(count_lines(report.output) == 3);  // header + 2 rows

  CHECK(run_cli("report --results " + dir.file("missing.csv")).exit_code == 2);

  write_file(dir.file("mangled.csv"),
             "run,interval,estimator,estimate,var_hat,ci_lo,ci_hi,forecast,true_value\n"
             "0,1,is,oops,,,,,1\n");
  CHECK(run_cli("report --results " + dir.file("mangled.csv")).exit_code == 4);

  // Header-only results: header only out.
  write_file(dir.file("empty.csv"),
             "run,interval,estimator,estimate,var_hat,ci_lo,ci_hi,forecast,true_value\n");
  const CliResult empty = run_cli("report --results " + dir.file("empty.csv"));
  CHECK(empty.exit_code == 0);
  CHECK(count_lines(empty.output) == 1);
}

TEST_CASE("forecast extends a results file") {
  const TempDir dir;
  write_file(dir.file("config.json"), kSineConfig);
  REQUIRE(run_cli("run --config " + dir.file("config.json") + " --out " + dir.file("out"))
              .exit_code == 0);

  const CliResult fc = run_cli("forecast --results " + dir.file("out/results.csv") +
                               " --estimator is_b0 --horizon 2");
  CHECK(fc.exit_code == 0);
  // Header plus 2 runs x 2 horizons.
  CHECK(count_lines(fc.output) == 1 + 4);
  CHECK(fc.output.find("run,estimator,interval,prediction") != std::string::npos);

  CHECK(run_cli("forecast --results " + dir.file("out/results.csv") + " --estimator nope")
            .exit_code == 4);
  CHECK(run_cli("forecast --results " + dir.file("void.csv") + " --estimator is_b0").exit_code ==
        2);
}
