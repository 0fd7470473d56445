#include "noisefair/model.hpp"

#include <cmath>
#include <numeric>

#include "noisefair/error.hpp"

namespace noisefair {

using nlohmann::json;

void RandomizedClassifier::validate() const {
  require(!components.empty(), "randomized classifier: no components");
  require(components.size() == weights.size(), "randomized classifier: component/weight count mismatch");
  double total = 0.0;
  for (double w : weights) {
    require(w >= 0.0, "randomized classifier: negative mixing weight");
    total += w;
  }
  require(std::abs(total - 1.0) < 1e-9, "randomized classifier: mixing weights must sum to 1");
  for (const auto& c : components) {
    require(c.weights.size() == components.front().weights.size(), "randomized classifier: ragged components");
    for (double w : c.weights) require(std::isfinite(w), "randomized classifier: non-finite weight");
  }
}

double RandomizedClassifier::positive_probability(std::span<const double> x) const {
  double p = 0.0;
  for (std::size_t k = 0; k < components.size(); ++k)
    if (components[k].predict(x) == kPositive) p += weights[k];
  return p;
}

std::vector<double> scores(const LinearModel& m, const Dataset& ds) {
  require(m.weights.size() == ds.cols(), "model has " + std::to_string(m.weights.size()) + " weights, dataset has " +
                                             std::to_string(ds.cols()) + " columns");
  std::vector<double> s(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) s[i] = m.score(ds.row(i));
  return s;
}

std::vector<double> positive_probabilities(const LinearModel& m, const Dataset& ds) {
  std::vector<double> p = scores(m, ds);
  for (double& v : p) v = v >= 0.0 ? 1.0 : 0.0;
  return p;
}

std::vector<double> positive_probabilities(const RandomizedClassifier& c, const Dataset& ds) {
  std::vector<double> p(ds.size(), 0.0);
  for (std::size_t k = 0; k < c.components.size(); ++k) {
    if (c.weights[k] == 0.0) continue;
    const auto pk = positive_probabilities(c.components[k], ds);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += c.weights[k] * pk[i];
  }
  return p;
}

double accuracy(const RandomizedClassifier& c, const Dataset& ds) {
  const auto p = positive_probabilities(c, ds);
  double correct = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) correct += ds.label(i) == kPositive ? p[i] : 1.0 - p[i];
  return correct / static_cast<double>(ds.size());
}

json model_to_json(const RandomizedClassifier& c, const Standardizer& s, const std::vector<std::string>& feature_names,
                   const std::string& fingerprint) {
  c.validate();
  json comps = json::array();
  for (const auto& m : c.components) comps.push_back(m.weights);
  return json{{"format", "noisefair-model-1"},
              {"feature_names", feature_names},
              {"components", comps},
              {"mixing_weights", c.weights},
              {"standardization", s.to_json()},
              {"config_fingerprint", fingerprint}};
}

LoadedModel model_from_json(const json& j, std::size_t expected_cols) {
  try {
    require(j.at("format").get<std::string>() == "noisefair-model-1", "model: unsupported format");
    LoadedModel out;
    for (const auto& w : j.at("components")) out.classifier.components.push_back({w.get<std::vector<double>>()});
    out.classifier.weights = j.at("mixing_weights").get<std::vector<double>>();
    out.classifier.validate();
    out.standardizer = Standardizer::from_json(j.at("standardization"));
    out.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    out.fingerprint = j.at("config_fingerprint").get<std::string>();
    const std::size_t cols = out.classifier.components.front().weights.size();
    require(out.feature_names.size() == cols, "model: feature names do not match weight count");
    require(out.standardizer.empty() || out.standardizer.mean.size() + 1 == cols,
            "model: standardization does not match weight count");
    if (expected_cols != 0 && expected_cols != cols)
      fail(ErrorCode::InvalidArgument, "model: trained on " + std::to_string(cols - 1) +
                                           " features, schema provides " + std::to_string(expected_cols - 1));
    return out;
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("model: ") + e.what());
  }
}

}  // namespace noisefair
