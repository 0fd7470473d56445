#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "noisefair/dataset.hpp"

namespace noisefair {

inline double sigmoid(double s) {
  if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

struct LinearModel {
  std::vector<double> weights;  // intercept first

  double score(std::span<const double> x) const {
    double s = 0.0;
    for (std::size_t c = 0; c < weights.size(); ++c) s += weights[c] * x[c];
    return s;
  }
  // sign(0) = +1
  int predict(std::span<const double> x) const { return score(x) >= 0.0 ? kPositive : kNegative; }
};

// Mixture over linear models; predicting draws a component by weight, so
// rates of the mixture are weight-averaged rates of its components.
struct RandomizedClassifier {
  std::vector<LinearModel> components;
  std::vector<double> weights;

  static RandomizedClassifier single(LinearModel m) { return {{std::move(m)}, {1.0}}; }
  void validate() const;
  double positive_probability(std::span<const double> x) const;
};

std::vector<double> scores(const LinearModel& m, const Dataset& ds);
// Hard-prediction probability of +1 per row (0/1 for a single model).
std::vector<double> positive_probabilities(const LinearModel& m, const Dataset& ds);
std::vector<double> positive_probabilities(const RandomizedClassifier& c, const Dataset& ds);
double accuracy(const RandomizedClassifier& c, const Dataset& ds);

// Persisted form: weights, mixture weights, feature standardization and a
// fingerprint of the training configuration.
nlohmann::json model_to_json(const RandomizedClassifier& c, const Standardizer& s,
                             const std::vector<std::string>& feature_names, const std::string& fingerprint);
struct LoadedModel {
  RandomizedClassifier classifier;
  Standardizer standardizer;
  std::vector<std::string> feature_names;
  std::string fingerprint;
};
// Refuses a model whose feature count differs from `expected_cols` (0 skips the check).
LoadedModel model_from_json(const nlohmann::json& j, std::size_t expected_cols = 0);

}  // namespace noisefair
