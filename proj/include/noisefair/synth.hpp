#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "noisefair/dataset.hpp"

namespace noisefair {

// One Gaussian cluster of `count` rows with fixed (group, label).
struct ClusterSpec {
  int group = 0;
  int label = kPositive;
  std::size_t count = 0;
  std::vector<double> mean;
  std::vector<std::vector<double>> cov;  // full covariance, must be positive definite
};

struct SynthSpec {
  std::vector<std::string> group_names;
  std::vector<ClusterSpec> clusters;
  std::uint64_t seed = 0;

  void validate() const;
  // Two groups, mildly imbalanced classes, overlapping clusters; a plain
  // logistic fit reaches about 0.85 clean accuracy.
  static SynthSpec adultlike(std::size_t per_group, std::uint64_t seed);
  // `{"preset": "adultlike", "per_group": n, "seed": s}` or an explicit
  // `{"group_names": [...], "clusters": [{group, label, count, mean, cov}]}`.
  static SynthSpec from_json(const nlohmann::json& j);
};

// Raw (unstandardized) features; deterministic given spec.seed.
Dataset synth_generate(const SynthSpec& spec);

}  // namespace noisefair
