#include "nsope/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"

namespace nsope {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataFileError("cannot open '" + path + "'");
  return in;
}

json parse_json_file(const std::string& path) {
  std::ifstream in = open_in(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataFileError("malformed JSON in '" + path + "': " + e.what());
  }
  return j;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_population_json(const Population& pop, const std::string& path) {
  json j;
  j["context_dist"] = std::vector<double>(pop.context_dist().begin(), pop.context_dist().end());
  auto& features = j["context_features"] = json::array();
  for (int s = 0; s < pop.num_contexts(); ++s) {
    features.push_back(std::vector<double>(pop.features(s).begin(), pop.features(s).end()));
  }
  j["num_actions"] = pop.num_actions();
  open_out(path) << j.dump(1) << '\n';
}

Population read_population_json(const std::string& path) {
  const json j = parse_json_file(path);
  try {
    return Population(j.at("context_dist").get<std::vector<double>>(),
                      j.at("context_features").get<std::vector<std::vector<double>>>(),
                      j.at("num_actions").get<int>());
  } catch (const json::exception& e) {
    throw DataFileError("bad population file '" + path + "': " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataFileError("bad population file '" + path + "': " + e.what());
  }
}

void write_policy_json(const Policy& policy, const std::string& path) {
  json j = json::array();
  for (int s = 0; s < policy.num_contexts(); ++s) {
    j.push_back(std::vector<double>(policy.row(s).begin(), policy.row(s).end()));
  }
  open_out(path) << j.dump(1) << '\n';
}

Policy read_policy_json(const std::string& path) {
  const json j = parse_json_file(path);
  try {
    return Policy(j.get<std::vector<std::vector<double>>>());
  } catch (const json::exception& e) {
    throw DataFileError("bad policy file '" + path + "': " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataFileError("bad policy file '" + path + "': " + e.what());
  }
}

void write_reward_model_json(const RewardModel& model, const std::string& path) {
  json j = json::object();
  for (int a = 0; a < model.num_actions(); ++a) {
    j[std::to_string(a)] = std::vector<double>(model.weights(a).begin(), model.weights(a).end());
  }
  open_out(path) << j.dump(1) << '\n';
}

void write_reward_table_json(const RewardTable& table, const std::string& path) {
  json j = json::array();
  for (int s = 0; s < table.num_contexts(); ++s) {
    json row = json::array();
    for (int a = 0; a < table.num_actions(); ++a) row.push_back(table.at(s, a));
    j.push_back(std::move(row));
  }
  open_out(path) << j.dump(1) << '\n';
}

RewardTable read_reward_table_json(const std::string& path) {
  const json j = parse_json_file(path);
  try {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty() || rows.front().empty()) {
      throw DataFileError("bad reward table '" + path + "': empty");
    }
    RewardTable table(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (std::size_t s = 0; s < rows.size(); ++s) {
      if (rows[s].size() != rows.front().size()) {
        throw DataFileError("bad reward table '" + path + "': ragged rows");
      }
      for (std::size_t a = 0; a < rows[s].size(); ++a) {
        table.at(static_cast<int>(s), static_cast<int>(a)) = rows[s][a];
      }
    }
    return table;
  } catch (const json::exception& e) {
    throw DataFileError("bad reward table '" + path + "': " + e.what());
  }
}

void write_logged_jsonl(std::span<const IntervalDataset> datasets, const std::string& path) {
  std::ofstream out = open_out(path);
  for (const auto& d : datasets) {
    for (const auto& x : d.samples) {
      json j;
      j["interval"] = d.interval;
      j["context"] = x.context;
      j["action"] = x.action;
      j["reward"] = x.reward;
      j["behavior_prob"] = x.behavior_prob;
      out << j.dump() << '\n';
    }
  }
}

std::vector<IntervalDataset> read_logged_jsonl(const std::string& path, const Population& pop,
                                               const RewardBounds& bounds) {
  std::ifstream in = open_in(path);
  std::map<int, IntervalDataset> by_interval;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
      const int interval = j.at("interval").get<int>();
      if (interval < 0) throw DataFileError("negative interval");
      IntervalDataset& d = by_interval[interval];
      d.interval = interval;
      d.samples.push_back({j.at("context").get<int>(), j.at("action").get<int>(),
                           j.at("reward").get<double>(), j.at("behavior_prob").get<double>()});
    } catch (const json::exception& e) {
      throw DataFileError("bad logged data in '" + path + "' line " +
                          std::to_string(line_number) + ": " + e.what());
    }
  }
  if (by_interval.empty()) throw DataFileError("no interactions in '" + path + "'");
  const int max_interval = by_interval.rbegin()->first;
  std::vector<IntervalDataset> out;
  out.reserve(max_interval + 1);
  for (int k = 0; k <= max_interval; ++k) {
    auto it = by_interval.find(k);
    if (it == by_interval.end()) {
      throw DataFileError("'" + path + "': interval " + std::to_string(k) + " has no data");
    }
    try {
      validate_dataset(pop, it->second, bounds);
    } catch (const std::invalid_argument& e) {
      throw DataFileError("'" + path + "': " + e.what());
    }
    out.push_back(std::move(it->second));
  }
  return out;
}

void write_trajectories_jsonl(std::span<const TrajectoryDataset> datasets,
                              const std::string& path) {
  std::ofstream out = open_out(path);
  for (const auto& d : datasets) {
    for (const auto& tau : d.trajectories) {
      json steps = json::array();
      for (const auto& step : tau.steps) {
        steps.push_back({{"state", step.state},
                         {"action", step.action},
                         {"reward", step.reward},
                         {"behavior_prob", step.behavior_prob}});
      }
      json j;
      j["interval"] = d.interval;
      j["steps"] = std::move(steps);
      out << j.dump() << '\n';
    }
  }
}

std::vector<TrajectoryDataset> read_trajectories_jsonl(const std::string& path) {
  std::ifstream in = open_in(path);
  std::map<int, TrajectoryDataset> by_interval;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const int interval = j.at("interval").get<int>();
      Trajectory tau;
      for (const auto& js : j.at("steps")) {
        TrajectoryStep step;
        step.state = js.at("state").get<int>();
        step.action = js.at("action").get<int>();
        step.reward = js.at("reward").get<double>();
        step.behavior_prob = js.at("behavior_prob").get<double>();
        if (!(step.behavior_prob > 0.0)) throw DataFileError("behavior_prob must be > 0");
        tau.steps.push_back(step);
      }
      if (tau.steps.empty()) throw DataFileError("empty trajectory");
      TrajectoryDataset& d = by_interval[interval];
      d.interval = interval;
      if (d.trajectories.empty()) {
        d.horizon = static_cast<int>(tau.steps.size());
      } else if (d.horizon != static_cast<int>(tau.steps.size())) {
        throw DataFileError("trajectory lengths differ within an interval");
      }
      d.trajectories.push_back(std::move(tau));
    } catch (const json::exception& e) {
      throw DataFileError("bad trajectory data in '" + path + "' line " +
                          std::to_string(line_number) + ": " + e.what());
    } catch (const DataFileError& e) {
      throw DataFileError("'" + path + "' line " + std::to_string(line_number) + ": " + e.what());
    }
  }
  std::vector<TrajectoryDataset> out;
  out.reserve(by_interval.size());
  for (auto& [k, d] : by_interval) out.push_back(std::move(d));
  return out;
}

namespace {

constexpr char kResultsHeader[] =
    "run,interval,estimator,estimate,var_hat,ci_lo,ci_hi,forecast,true_value";

}  // namespace

void write_results_csv(const RunResults& results, const std::string& path) {
  std::ofstream out = open_out(path);
  out << kResultsHeader << '\n';
  for (int run = 0; run < results.num_runs(); ++run) {
    for (int k = 1; k < results.num_intervals(); ++k) {
      for (int e = 0; e < results.num_estimators(); ++e) {
        const CellResult& cell = results.cell(run, k, e);
        out << run << ',' << k << ',' << results.estimator_ids()[e] << ',';
        if (cell.ok) out << fmt(cell.report.estimate);
        out << ',';
        if (cell.ok && cell.has_ci) {
          out << fmt(cell.report.var_hat) << ',' << fmt(cell.report.ci_lo) << ','
              << fmt(cell.report.ci_hi);
        } else {
          out << ",,";
        }
        out << ',';
        if (cell.has_forecast) out << fmt(cell.forecast);
        out << ',' << fmt(results.true_values[k]) << '\n';
      }
    }
  }
}

void write_results_json(const RunResults& results, const std::string& path) {
  json rows = json::array();
  for (int run = 0; run < results.num_runs(); ++run) {
    for (int k = 1; k < results.num_intervals(); ++k) {
      for (int e = 0; e < results.num_estimators(); ++e) {
        const CellResult& cell = results.cell(run, k, e);
        json row;
        row["run"] = run;
        row["interval"] = k;
        row["estimator"] = results.estimator_ids()[e];
        row["true_value"] = results.true_values[k];
        if (cell.ok) {
          row["estimate"] = cell.report.estimate;
          if (cell.has_ci) {
            row["var_hat"] = cell.report.var_hat;
            row["ci_lo"] = cell.report.ci_lo;
            row["ci_hi"] = std::isfinite(cell.report.ci_hi) ? json(cell.report.ci_hi)
                                                            : json("inf");
          }
        } else {
          row["error"] = cell.error;
        }
        if (cell.has_forecast) row["forecast"] = cell.forecast;
        rows.push_back(std::move(row));
      }
    }
  }
  open_out(path) << rows.dump(1) << '\n';
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

double parse_double_field(const std::string& field, int line_number) {
  if (field == "inf") return std::numeric_limits<double>::infinity();
  if (field == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ResultFileError("bad numeric field '" + field + "' on line " +
                          std::to_string(line_number));
  }
}

int parse_int_field(const std::string& field, int line_number) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(field, &used);
    if (used != field.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ResultFileError("bad integer field '" + field + "' on line " +
                          std::to_string(line_number));
  }
}

}  // namespace

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ResultFileError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ResultFileError("'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader) {
    throw ResultFileError("'" + path + "' does not look like a results file");
  }
  std::vector<ResultRow> rows;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 9) {
      throw ResultFileError("wrong field count on line " + std::to_string(line_number));
    }
    ResultRow row;
    row.run = parse_int_field(f[0], line_number);
    row.interval = parse_int_field(f[1], line_number);
    row.estimator = f[2];
    row.ok = !f[3].empty();
    if (row.ok) row.estimate = parse_double_field(f[3], line_number);
    row.has_ci = !f[4].empty();
    if (row.has_ci) {
      row.var_hat = parse_double_field(f[4], line_number);
      row.ci_lo = parse_double_field(f[5], line_number);
      row.ci_hi = parse_double_field(f[6], line_number);
    }
    row.has_forecast = !f[7].empty();
    if (row.has_forecast) row.forecast = parse_double_field(f[7], line_number);
    row.true_value = parse_double_field(f[8], line_number);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<MetricSummary> summarize_rows(std::span<const ResultRow> rows) {
  std::vector<std::string> ids;
  for (const auto& r : rows) {
    if (std::find(ids.begin(), ids.end(), r.estimator) == ids.end()) ids.push_back(r.estimator);
  }
  std::vector<MetricSummary> out;
  for (const auto& id : ids) {
    MetricSummary row;
    row.estimator = id;

    std::map<int, std::pair<double, int>> run_mse;       // current
    std::map<int, std::pair<double, int>> run_fmse;      // forecast
    std::int64_t covered = 0, ci_cells = 0, width_cells = 0;
    double width_sum = 0.0;
    int missing = 0;
    for (const auto& r : rows) {
      if (r.estimator != id) continue;
      if (!r.ok) {
        ++missing;
      } else {
        const double d = r.estimate - r.true_value;
        auto& [se, m] = run_mse[r.run];
        se += d * d;
        ++m;
      }
      if (r.has_forecast && r.interval >= 2) {
        const double d = r.forecast - r.true_value;
        auto& [se, m] = run_fmse[r.run];
        se += d * d;
        ++m;
      }
      if (r.ok && r.has_ci) {
        ++ci_cells;
        if (r.ci_lo <= r.true_value && r.true_value <= r.ci_hi) ++covered;
        if (std::isfinite(r.ci_hi)) {
          width_sum += r.ci_hi - r.ci_lo;
          ++width_cells;
        }
      }
    }
    auto root_mean = [](const std::map<int, std::pair<double, int>>& per_run) {
      if (per_run.empty()) return std::numeric_limits<double>::quiet_NaN();
      double total = 0.0;
      for (const auto& [run, acc] : per_run) total += acc.first / acc.second;
      return std::sqrt(total / static_cast<double>(per_run.size()));
    };
    row.rmse_current = root_mean(run_mse);
    row.rmse_forecast = root_mean(run_fmse);
    row.coverage = ci_cells > 0 ? static_cast<double>(covered) / ci_cells
                                : std::numeric_limits<double>::quiet_NaN();
    row.mean_width = width_cells > 0 ? width_sum / width_cells
                                     : std::numeric_limits<double>::quiet_NaN();
    row.missing_cells = missing;
    out.push_back(std::move(row));
  }
  return out;
}

void write_summary_csv(std::span<const MetricSummary> summary, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "estimator,rmse_current,rmse_forecast,coverage,mean_width\n";
  for (const auto& row : summary) {
    out << row.estimator << ',' << fmt(row.rmse_current) << ',' << fmt(row.rmse_forecast) << ','
        << fmt(row.coverage) << ',' << fmt(row.mean_width) << '\n';
  }
}

void write_summary_json(std::span<const MetricSummary> summary, const std::string& path) {
  json rows = json::array();
  for (const auto& row : summary) {
    json j;
    j["estimator"] = row.estimator;
    j["rmse_current"] = row.rmse_current;
    j["rmse_forecast"] = row.rmse_forecast;
    j["coverage"] = row.coverage;
    j["mean_width"] = row.mean_width;
    j["missing_cells"] = row.missing_cells;
    rows.push_back(std::move(j));
  }
  open_out(path) << rows.dump(1) << '\n';
}

}  // namespace nsope
