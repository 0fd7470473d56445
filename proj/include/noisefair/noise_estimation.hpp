#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "noisefair/dataset.hpp"

namespace noisefair {

struct TrainConfig;

inline constexpr double kEpsClipCeiling = 0.49;
inline constexpr double kDeltaFloor = 0.02;

struct GroupEstimate {
  double eps_plus = 0.0;
  double eps_minus = 0.0;
  double prior_plus = 0.5;  // P(Y = +1 | Z = z)
  bool clipped = false;
  double delta() const { return 1.0 - eps_plus - eps_minus; }
};

// Per-group noise rates and clean priors used by the corrected losses and
// constraints. Produced either by the estimator or from known rates.
struct NoiseEstimate {
  std::vector<GroupEstimate> groups;
  std::vector<std::string> group_names;

  const GroupEstimate& operator[](std::size_t z) const { return groups[z]; }
  std::size_t num_groups() const { return groups.size(); }
  void validate() const;

  // Known rates; priors recovered from the noisy label marginals of `noisy`.
  static NoiseEstimate from_spec(const NoiseSpec& spec, const Dataset& noisy);

  nlohmann::json to_json() const;
  static NoiseEstimate from_json(const nlohmann::json& j);
};

// Out-of-fold predicted probability that the noisy label is +1.
struct ProbabilityTable {
  std::vector<double> p_plus;
  std::vector<int> fold_id;
  double p(std::size_t i, int label) const { return label == kPositive ? p_plus[i] : 1.0 - p_plus[i]; }
};

// Index 0 is class +1, index 1 is class -1.
inline constexpr std::size_t class_index(int label) { return label == kPositive ? 0 : 1; }

struct Thresholds {
  // t[z][class_index(l)]
  std::vector<std::array<double, 2>> t;
  double at(int label, int z) const { return t[static_cast<std::size_t>(z)][class_index(label)]; }
};

struct ConfidentJoint {
  using Table = std::array<std::array<double, 2>, 2>;  // [noisy k][latent l]
  std::vector<Table> counts;  // raw threshold-crossing counts
  std::vector<Table> joint;   // calibrated, normalized to sum 1 per group
  Thresholds thresholds;
};

struct EstimatorConfig {
  int folds = 5;
  std::uint64_t seed = 0;
  int epochs = 50;  // per fold
};

// Feature map used by the pre-trained classifier: the dataset's columns
// followed by one copy per group 1..m-1, zeroed outside that group, so
// each group gets its own intercept and slopes.
Dataset with_group_indicators(const Dataset& ds);

ProbabilityTable pretrain_probabilities(const Dataset& noisy, int folds, std::uint64_t seed, const TrainConfig& cfg);
ProbabilityTable pretrain_probabilities(const Dataset& noisy, int folds, std::uint64_t seed);

Thresholds self_confidence_thresholds(const ProbabilityTable& pt, const Dataset& noisy);

ConfidentJoint confident_joint(const ProbabilityTable& pt, const Dataset& noisy, const Thresholds& thresholds);

NoiseEstimate estimate_noise(const ConfidentJoint& cj, const std::vector<std::string>& group_names);

// The whole pipeline: cross-fitted probabilities -> thresholds -> joint -> rates.
NoiseEstimate estimate_noise_from_data(const Dataset& noisy, const EstimatorConfig& cfg);

}  // namespace noisefair
