#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "noisefair/dataset.hpp"
#include "noisefair/fairness.hpp"
#include "noisefair/noise_estimation.hpp"
#include "noisefair/trainer.hpp"

namespace noisefair {

enum class Method { Clean, Corrupt, Surrogate, GroupPeer };
enum class Knowledge { None, True, Estimated };

Method parse_method(const std::string& s);
std::string to_string(Method m);
Knowledge parse_knowledge(const std::string& s);
std::string to_string(Knowledge k);

struct ExperimentConfig {
  // Either {"synthetic": {...synth spec...}} or {"csv": path, label_column,
  // positive_symbol, group_column, feature_columns}.
  nlohmann::json dataset;
  nlohmann::json noise;  // {group_name: {eps_plus, eps_minus}}
  Metric metric = Metric::EqualOdds;
  double delta = 0.02;
  // Matches how inject_noise draws flips.
  NoiseModel noise_model = NoiseModel::ClassConditional;
  std::vector<Method> methods{Method::Clean, Method::Corrupt, Method::Surrogate, Method::GroupPeer};
  std::vector<Knowledge> knowledge{Knowledge::True, Knowledge::Estimated};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  TrainConfig train;
  std::vector<double> alpha_grid{0.0, 0.3, 0.6, 1.0};
  double test_fraction = 0.2;
  double validation_fraction = 0.08;
  int estimator_folds = 5;
  int estimator_epochs = 50;
  std::string output_dir = "results";

  void validate() const;
  // Relative csv paths resolve against `base_dir`.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::string& base_dir = "");
  nlohmann::json to_json() const;
};

struct GroupRatesReport {
  std::string group;
  double true_eps_plus = 0.0, true_eps_minus = 0.0;
  std::optional<double> est_eps_plus, est_eps_minus;
};

struct ResultRow {
  Method method = Method::Clean;
  Knowledge knowledge = Knowledge::None;
  std::uint64_t seed = 0;
  double test_accuracy = 0.0;
  double test_violation = 0.0;        // clean test labels
  double train_noisy_violation = 0.0;  // perceived, on noisy training labels
  std::optional<double> alpha;
  std::vector<GroupRatesReport> rates;
  double seconds = 0.0;  // written to timings.csv only
};

struct SummaryStat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single run
};

struct MethodSummary {
  Method method;
  Knowledge knowledge;
  std::size_t runs = 0;
  SummaryStat accuracy, violation, noisy_violation;
};

struct BenchmarkResult {
  std::vector<ResultRow> rows;  // ordered by (method, knowledge, seed)
  std::vector<MethodSummary> summary;
};

std::vector<MethodSummary> summarize(const std::vector<ResultRow>& rows);
std::string results_csv(const std::vector<ResultRow>& rows);
nlohmann::json summary_json(const std::vector<MethodSummary>& summary, double delta);

// Loads the configured dataset without standardization.
Dataset load_experiment_data(const ExperimentConfig& cfg, std::uint64_t seed);

// Runs every seed (up to `jobs` in parallel), then writes results.csv,
// summary.json and timings.csv into cfg.output_dir when `write` is set.
// On failure, completed rows are still written and the first error is
// rethrown with its (method, seed) context.
BenchmarkResult run_benchmark(const ExperimentConfig& cfg, int jobs = 1, bool write = true);

struct SweepConfig {
  ExperimentConfig base;
  std::vector<double> grid{0.1, 0.2, 0.3, 0.4};
  std::string noisy_group;  // empty: the first group
};

struct SweepResult {
  std::vector<double> grid;
  std::vector<BenchmarkResult> points;
};

// Symmetric noise eps on one group, the others clean; writes sweep.csv in
// long format (eps, method, noise_knowledge, seed, metric, value) and
// sweep_summary.json.
SweepResult run_noise_sweep(const SweepConfig& cfg, int jobs = 1, bool write = true);

// Jobs from an explicit flag, then NOISEFAIR_JOBS, then 1.
int resolve_jobs(std::optional<int> flag);

}  // namespace noisefair
