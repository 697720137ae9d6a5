#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "nsope/harness.hpp"
#include "nsope/io.hpp"

using namespace nsope;

namespace {

struct TempDir {
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("nsope_io_" + std::to_string(std::rand()) + std::to_string(std::rand()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  std::filesystem::path path;
};

RunResults tiny_results() {
  RunResults results(2, 3, {"is", "reg"});
  results.true_values = {0.1, 0.5, 0.9};
  for (int run = 0; run < 2; ++run) {
    for (int k = 1; k < 3; ++k) {
      for (int e = 0; e < 2; ++e) {
        CellResult& cell = results.cell(run, k, e);
        if (run == 1 && k == 2 && e == 1) {
          cell.ok = false;
          cell.error = "synthetic failure";
          continue;
        }
        cell.ok = true;
        cell.has_ci = true;
        cell.report.estimate = 0.5 + 0.01 * run + 0.1 * k + 0.001 * e;
        cell.report.var_hat = 0.02;
        cell.report.ci_lo = cell.report.estimate - 0.2;
        cell.report.ci_hi = e == 0 ? cell.report.estimate + 0.2
                                   : std::numeric_limits<double>::infinity();
        if (k == 2) {
          cell.has_forecast = true;
          cell.forecast = 0.77;
        }
      }
    }
  }
  return results;
}

}  // namespace

TEST_CASE("population, policy and reward table files round trip") {
  const TempDir dir;
  const Population pop = fixture_a_population();
  write_population_json(pop, dir.file("pop.json"));
  const Population back = read_population_json(dir.file("pop.json"));
  CHECK(back.num_contexts() == 2);
  CHECK(back.num_actions() == 2);
  CHECK(back.context_prob(0) == 0.5);
  CHECK(back.features(1)[0] == 1.0);

  const Policy policy = fixture_a_target();
  write_policy_json(policy, dir.file("policy.json"));
  const Policy policy_back = read_policy_json(dir.file("policy.json"));
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 2; ++a) CHECK(policy_back.prob(s, a) == policy.prob(s, a));
  }

  write_reward_table_json(fixture_a_rewards(), dir.file("rewards.json"));
  const RewardTable table = read_reward_table_json(dir.file("rewards.json"));
  CHECK(table.at(1, 0) == 0.5);

  const RewardModel model({{1.0, -0.5}, {0.25, 0.75}}, RewardBounds{}, {0, 1});
  write_reward_model_json(model, dir.file("model.json"));
  std::ifstream model_in(dir.file("model.json"));
  nlohmann::json dumped;
  model_in >> dumped;
  CHECK(dumped.size() == 2);
  CHECK(dumped.at("0").get<std::vector<double>>() == std::vector<double>{1.0, -0.5});
  CHECK(dumped.at("1").get<std::vector<double>>() == std::vector<double>{0.25, 0.75});

  CHECK_THROWS_AS(read_population_json(dir.file("missing.json")), DataFileError);
  std::ofstream(dir.file("broken.json")) << "{ not json";
  CHECK_THROWS_AS(read_policy_json(dir.file("broken.json")), DataFileError);
}

TEST_CASE("logged interactions round trip and validate") {
  const TempDir dir;
  const Population pop = fixture_a_population();
  Rng rng(3);
  std::vector<IntervalDataset> datasets;
  for (int k = 0; k < 3; ++k) {
    datasets.push_back(
        sample_dataset(pop, fixture_a_behavior(), fixture_a_rewards(), k, 20, rng));
  }
  write_logged_jsonl(datasets, dir.file("logs.jsonl"));
  const auto back = read_logged_jsonl(dir.file("logs.jsonl"), pop, RewardBounds{});
  REQUIRE(back.size() == 3);
  for (int k = 0; k < 3; ++k) {
    REQUIRE(back[k].size() == 20);
    CHECK(back[k].interval == k);
    for (int i = 0; i < 20; ++i) {
      CHECK(back[k].samples[i].context == datasets[k].samples[i].context);
      CHECK(back[k].samples[i].reward == datasets[k].samples[i].reward);
    }
  }

  // Out-of-range context fails validation at ingestion.
  std::ofstream(dir.file("bad.jsonl"))
      << R"({"interval":0,"context":9,"action":0,"reward":1.0,"behavior_prob":0.5})" << '\n';
  CHECK_THROWS_AS(read_logged_jsonl(dir.file("bad.jsonl"), pop, RewardBounds{}), DataFileError);

  // A gap in the interval sequence is rejected.
  std::ofstream(dir.file("gap.jsonl"))
      << R"({"interval":0,"context":0,"action":0,"reward":1.0,"behavior_prob":0.5})" << '\n'
      << R"({"interval":2,"context":0,"action":0,"reward":1.0,"behavior_prob":0.5})" << '\n';
  CHECK_THROWS_AS(read_logged_jsonl(dir.file("gap.jsonl"), pop, RewardBounds{}), DataFileError);
}

TEST_CASE("trajectories round trip") {
  const TempDir dir;
  TreeMdpConfig config;
  config.horizon = 3;
  config.num_intervals = 2;
  const TreeMdpEnv env = make_tree_mdp(config);
  const Policy behavior = Policy::uniform(env.num_states(), 2);
  Rng rng(7);
  std::vector<TrajectoryDataset> datasets;
  for (int k = 0; k < 2; ++k) datasets.push_back(env.sample_trajectories(k, behavior, 5, rng));

  write_trajectories_jsonl(datasets, dir.file("traj.jsonl"));
  const auto back = read_trajectories_jsonl(dir.file("traj.jsonl"));
  REQUIRE(back.size() == 2);
  CHECK(back[0].horizon == 3);
  CHECK(back[1].size() == 5);
  CHECK(back[1].trajectories[2].steps[1].reward == datasets[1].trajectories[2].steps[1].reward);

  std::ofstream(dir.file("badtraj.jsonl"))
      << R"({"interval":0,"steps":[{"state":0,"action":0,"reward":1.0,"behavior_prob":0.0}]})"
      << '\n';
  CHECK_THROWS_AS(read_trajectories_jsonl(dir.file("badtraj.jsonl")), DataFileError);
}

TEST_CASE("results csv round trips through summarize_rows") {
  const TempDir dir;
  const RunResults results = tiny_results();
  write_results_csv(results, dir.file("results.csv"));

  const std::vector<ResultRow> rows = read_results_csv(dir.file("results.csv"));
  CHECK(rows.size() == 2 * 2 * 2);

  int failed = 0;
  for (const auto& r : rows) {
    if (!r.ok) ++failed;
    if (r.estimator == "reg" && r.has_ci) CHECK(std::isinf(r.ci_hi));
  }
  CHECK(failed == 1);

  const auto from_rows = summarize_rows(rows);
  const auto direct = summarize(results);
  REQUIRE(from_rows.size() == direct.size());
  for (std::size_t i = 0; i < direct.size(); ++i) {
    CHECK(from_rows[i].estimator == direct[i].estimator);
    CHECK(from_rows[i].rmse_current == doctest::Approx(direct[i].rmse_current).epsilon(1e-12));
    CHECK(from_rows[i].coverage == doctest::Approx(direct[i].coverage).epsilon(1e-12));
    CHECK(from_rows[i].missing_cells == direct[i].missing_cells);
    const bool nan_direct = std::isnan(direct[i].mean_width);
    const bool nan_rows = std::isnan(from_rows[i].mean_width);
    CHECK(nan_direct == nan_rows);
    if (!nan_direct) {
      CHECK(from_rows[i].mean_width == doctest::Approx(direct[i].mean_width).epsilon(1e-12));
    }
    const bool fnan_direct = std::isnan(direct[i].rmse_forecast);
    CHECK(fnan_direct == std::isnan(from_rows[i].rmse_forecast));
    if (!fnan_direct) {
      CHECK(from_rows[i].rmse_forecast == doctest::Approx(direct[i].rmse_forecast).epsilon(1e-12));
    }
  }

  write_summary_csv(direct, dir.file("summary.csv"));
  std::ifstream summary(dir.file("summary.csv"));
  std::string header;
  std::getline(summary, header);
  CHECK(header == "estimator,rmse_current,rmse_forecast,coverage,mean_width");
  int data_rows = 0;
  std::string line;
  while (std::getline(summary, line)) {
    if (!line.empty()) ++data_rows;
  }
  CHECK(data_rows == 2);

  CHECK_NOTHROW(write_results_json(results, dir.file("results.json")));
  CHECK_NOTHROW(write_summary_json(direct, dir.file("summary.json")));
}

TEST_CASE("malformed results files are rejected") {
  const TempDir dir;
  CHECK_THROWS_AS(read_results_csv(dir.file("absent.csv")), ResultFileError);

  std::ofstream(dir.file("badheader.csv")) << "not,a,results,file\n";
  CHECK_THROWS_AS(read_results_csv(dir.file("badheader.csv")), ResultFileError);

  std::ofstream(dir.file("badrow.csv"))
      << "run,interval,estimator,estimate,var_hat,ci_lo,ci_hi,forecast,true_value\n"
      << "0,1,is,abc,,,,,0.5\n";
  CHECK_THROWS_AS(read_results_csv(dir.file("badrow.csv")), ResultFileError);

  std::ofstream(dir.file("shortrow.csv"))
      << "run,interval,estimator,estimate,var_hat,ci_lo,ci_hi,forecast,true_value\n"
      << "0,1,is\n";
  CHECK_THROWS_AS(read_results_csv(dir.file("shortrow.csv")), ResultFileError);
}
