#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "critpop/engines.hpp"
#include "critpop/experiments.hpp"
#include "critpop/models/model.hpp"

namespace critpop::cli {

enum class Task { Simulate, Threshold, Tune, Couple, Experiment };
std::string_view to_string(Task task);
std::optional<Task> task_from_string(std::string_view name);

struct TuneOptions {
  std::string parameter;
  double lo = 0.0;
  double hi = 0.0;
  double tolerance = 1e-3;
  int max_evaluations = 200;
  double max_horizon = 0.0;
};

struct Sweep {
  std::string parameter;
  std::vector<double> values;
};

// A validated config. `effective` is the same document with every default
// filled in; it is echoed into each summary.
struct RunConfig {
  std::string model_id;
  ModelSpec spec{Sirs(SirsParams{})}; // placeholder until parsed
  IntegratorConfig cfg;
  int replicates = 1;
  std::uint64_t seed = 1;
  int checkpoints = 1000;
  int batches = BatchMeans::kDefaultBatches;
  std::optional<Task> task;
  Eigen::VectorXd initial_state; // empty: model default

  std::optional<ThresholdMethod> method; // threshold, tune, experiment
  std::optional<TuneOptions> tune;       // tune; optional for experiment
  std::optional<ExperimentKind> experiment_kind; // empty: classify from the threshold
  VerdictRules rules;
  std::optional<Sweep> sweep;

  nlohmann::json effective;
};

// Parses and validates a JSON config. Raises ParseError (with line and
// column) for malformed text and SchemaError listing every violation.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

struct RunOutcome {
  int exit_code = 0; // 0 success, 2 verdict FAIL
  nlohmann::json summary;
};

// Runs the task, writing summary.json and any per-replicate CSVs under
// out_dir (sweeps: one point_<i>/ per value). Files are written atomically.
RunOutcome run(RunConfig config, Task task, const std::filesystem::path& out_dir, int jobs);

// Experiment report as stored under "results" of an experiment summary
// (per-seed series live in the CSVs and are not round-tripped).
nlohmann::json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& results);

// CSV with header `t,<columns>` and 12 significant digits.
std::string format_csv(const std::vector<std::string>& columns,
                       const std::vector<std::vector<double>>& rows);
void write_atomic(const std::filesystem::path& path, const std::string& content);

} // namespace critpop::cli
