#include "noisefair/synth.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "noisefair/error.hpp"
#include "noisefair/rng.hpp"

namespace noisefair {

using nlohmann::json;

void SynthSpec::validate() const {
  require(!group_names.empty(), "synth: no groups");
  require(!clusters.empty(), "synth: no clusters");
  const std::size_t d = clusters.front().mean.size();
  require(d >= 1, "synth: clusters need at least one feature");
  std::vector<bool> seen(group_names.size(), false);
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    const auto& c = clusters[k];
    const std::string where = "synth: cluster " + std::to_string(k) + ": ";
    require(c.group >= 0 && static_cast<std::size_t>(c.group) < group_names.size(), where + "group id out of range");
    require(c.label == kPositive || c.label == kNegative, where + "label must be +1 or -1");
    require(c.count > 0, where + "count must be > 0");
    require(c.mean.size() == d, where + "mean has the wrong dimension");
    require(c.cov.size() == d, where + "covariance has the wrong dimension");
    for (const auto& row : c.cov) require(row.size() == d, where + "covariance has the wrong dimension");
    seen[static_cast<std::size_t>(c.group)] = true;
  }
  for (std::size_t z = 0; z < seen.size(); ++z)
    require(seen[z], "synth: group '" + group_names[z] + "' has no clusters");
}

SynthSpec SynthSpec::adultlike(std::size_t per_group, std::uint64_t seed) {
  require(per_group >= 10, "synth: adultlike needs per_group >= 10");
  constexpr std::size_t d = 6;
  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) cov[a][b] = a == b ? 1.0 : 0.25 * std::pow(0.5, std::abs(double(a) - double(b)));
  SynthSpec s;
  s.seed = seed;
  s.group_names = {"female", "male"};
  struct Shape {
    int group;
    double positive_share;
    std::vector<double> neg_mean, pos_mean;
  };
  const std::vector<Shape> shapes = {
      {0, 0.25, {0.0, 0.0, 0.0, 0.0, 0.0, 0.0}, {5.0, 3.5, 2.8, 1.5, 0.76, 0.0}},
      {1, 0.35, {0.3, 0.2, 0.0, 0.1, 0.0, 0.0}, {1.26, 0.84, 0.496, 0.58, 0.128, 0.304}},
  };
  for (const auto& sh : shapes) {
    const auto pos = static_cast<std::size_t>(std::lround(sh.positive_share * static_cast<double>(per_group)));
    s.clusters.push_back({sh.group, kNegative, per_group - pos, sh.neg_mean, cov});
    s.clusters.push_back({sh.group, kPositive, pos, sh.pos_mean, cov});
  }
  return s;
}

SynthSpec SynthSpec::from_json(const json& j) {
  try {
    if (j.contains("preset")) {
      const auto preset = j.at("preset").get<std::string>();
      if (preset != "adultlike") fail(ErrorCode::InvalidArgument, "synth: unknown preset '" + preset + "'");
      return adultlike(j.value("per_group", std::size_t{5000}), j.value("seed", std::uint64_t{0}));
    }
    SynthSpec s;
    s.group_names = j.at("group_names").get<std::vector<std::string>>();
    s.seed = j.value("seed", std::uint64_t{0});
    for (const auto& c : j.at("clusters"))
      s.clusters.push_back({c.at("group").get<int>(), c.at("label").get<int>(), c.at("count").get<std::size_t>(),
                            c.at("mean").get<std::vector<double>>(),
                            c.at("cov").get<std::vector<std::vector<double>>>()});
    s.validate();
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("synth spec: ") + e.what());
  }
}

Dataset synth_generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t d = spec.clusters.front().mean.size();
  const std::size_t cols = d + 1;
  std::size_t n = 0;
  for (const auto& c : spec.clusters) n += c.count;

  std::vector<double> features;
  features.reserve(n * cols);
  std::vector<int> labels, groups;
  const Philox rng(spec.seed);
  std::uint64_t counter = 0;
  Eigen::VectorXd draw(static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < spec.clusters.size(); ++k) {
    const auto& c = spec.clusters[k];
    Eigen::MatrixXd cov(d, d);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = c.cov[a][b];
    if (!cov.isApprox(cov.transpose()))
      fail(ErrorCode::InvalidArgument, "synth: cluster " + std::to_string(k) + " covariance is not symmetric");
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      fail(ErrorCode::InvalidArgument, "synth: cluster " + std::to_string(k) + " covariance is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    for (std::size_t r = 0; r < c.count; ++r) {
      for (std::size_t a = 0; a < d; ++a) draw(static_cast<Eigen::Index>(a)) = rng.normal(streams::kSynth, counter++);
      const Eigen::VectorXd x = L * draw;
      features.push_back(1.0);
      for (std::size_t a = 0; a < d; ++a) features.push_back(c.mean[a] + x(static_cast<Eigen::Index>(a)));
      labels.push_back(c.label);
      groups.push_back(c.group);
    }
  }
  std::vector<std::string> names{"intercept"};
  for (std::size_t a = 0; a < d; ++a) names.push_back("x" + std::to_string(a + 1));
  return Dataset(std::move(features), cols, std::move(labels), std::move(groups), spec.group_names, std::move(names));
}

}  // namespace noisefair
