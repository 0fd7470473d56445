#include "noisefair/noise_estimation.hpp"

#include <algorithm>
#include <cmath>

#include "noisefair/error.hpp"
#include "noisefair/model.hpp"
#include "noisefair/rng.hpp"
#include "noisefair/trainer.hpp"

namespace noisefair {

using nlohmann::json;

void NoiseEstimate::validate() const {
  require(!groups.empty(), "noise estimate: no groups");
  require(group_names.size() == groups.size(), "noise estimate: group names do not match group count");
  for (std::size_t z = 0; z < groups.size(); ++z) {
    const auto& g = groups[z];
    const std::string where = "noise estimate for group '" + group_names[z] + "': ";
    require(g.eps_plus >= 0.0 && g.eps_plus < 1.0 && g.eps_minus >= 0.0 && g.eps_minus < 1.0,
            where + "rates must lie in [0, 1)");
    require(g.delta() >= kDeltaFloor - 1e-12, where + "1 - eps_plus - eps_minus is below the floor 0.02");
    require(g.prior_plus > 0.0 && g.prior_plus < 1.0, where + "prior_plus must lie in (0, 1)");
  }
}

NoiseEstimate NoiseEstimate::from_spec(const NoiseSpec& spec, const Dataset& noisy) {
  require(spec.num_groups() == noisy.num_groups(), "noise estimate: spec does not cover every group");
  NoiseEstimate out;
  out.group_names = noisy.group_names();
  for (std::size_t z = 0; z < spec.num_groups(); ++z) {
    const auto& r = spec[z];
    const auto zi = static_cast<int>(z);
    const double n = static_cast<double>(noisy.group_size(zi));
    require(n > 0.0, "noise estimate: group '" + out.group_names[z] + "' is empty");
    const double noisy_pos = static_cast<double>(noisy.count(zi, kPositive)) / n;
    // P~(+) = pi (1 - e+) + (1 - pi) e-
    const double prior = std::clamp((noisy_pos - r.eps_minus) / r.delta(), 1e-3, 1.0 - 1e-3);
    out.groups.push_back({r.eps_plus, r.eps_minus, prior, false});
  }
  out.validate();
  return out;
}

json NoiseEstimate::to_json() const {
  json j = json::object();
  for (std::size_t z = 0; z < groups.size(); ++z) {
    const auto& g = groups[z];
    j[group_names[z]] = {{"eps_plus", g.eps_plus}, {"eps_minus", g.eps_minus}, {"delta", g.delta()},
                         {"prior_plus", g.prior_plus}, {"clipped", g.clipped}};
  }
  return j;
}

NoiseEstimate NoiseEstimate::from_json(const json& j) {
  try {
    require(j.is_object(), "noise estimate: expected an object keyed by group name");
    NoiseEstimate out;
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& v = it.value();
      out.group_names.push_back(it.key());
      out.groups.push_back({v.at("eps_plus").get<double>(), v.at("eps_minus").get<double>(),
                            v.value("prior_plus", 0.5), v.value("clipped", false)});
    }
    out.validate();
    return out;
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("noise estimate: ") + e.what());
  }
}

Dataset with_group_indicators(const Dataset& ds) {
  const std::size_t m = ds.num_groups();
  const std::size_t base = ds.cols();
  const std::size_t cols = base * m;
  std::vector<double> features(ds.size() * cols, 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto x = ds.row(i);
    double* out = features.data() + i * cols;
    std::copy(x.begin(), x.end(), out);
    const auto z = static_cast<std::size_t>(ds.group(i));
    if (z >= 1) std::copy(x.begin(), x.end(), out + base * z);
  }
  std::vector<std::string> names = ds.feature_names();
  for (std::size_t z = 1; z < m; ++z)
    for (std::size_t c = 0; c < base; ++c) names.push_back(ds.feature_names()[c] + "*group=" + ds.group_names()[z]);
  return Dataset(std::move(features), cols, ds.labels(), ds.groups(), ds.group_names(), std::move(names));
}

ProbabilityTable pretrain_probabilities(const Dataset& noisy, int folds, std::uint64_t seed, const TrainConfig& cfg) {
  require(folds >= 2, "pretrain: folds must be >= 2");
  const std::size_t m = noisy.num_groups();
  // Stratified fold assignment per (group, noisy label).
  std::vector<std::vector<std::size_t>> strata(2 * m);
  for (std::size_t i = 0; i < noisy.size(); ++i)
    strata[2 * static_cast<std::size_t>(noisy.group(i)) + class_index(noisy.label(i))].push_back(i);
  const Philox rng(seed);
  ProbabilityTable pt;
  pt.fold_id.assign(noisy.size(), 0);
  pt.p_plus.assign(noisy.size(), 0.0);
  for (std::size_t s = 0; s < strata.size(); ++s) {
    auto& rows = strata[s];
    if (rows.size() < static_cast<std::size_t>(folds))
      fail(ErrorCode::Stratification, "pretrain: group '" + noisy.group_names()[s / 2] + "' has " +
                                          std::to_string(rows.size()) + " examples with noisy label " +
                                          (s % 2 == 0 ? "+1" : "-1") + ", fewer than " + std::to_string(folds) +
                                          " folds");
    shuffle(rows, rng, streams::kFolds, s);
    for (std::size_t k = 0; k < rows.size(); ++k) pt.fold_id[rows[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
  }

  const Dataset augmented = with_group_indicators(noisy);
  const LossSpec spec{};
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_rows, held_rows;
    for (std::size_t i = 0; i < noisy.size(); ++i) (pt.fold_id[i] == f ? held_rows : train_rows).push_back(i);
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = derive_seed(seed, static_cast<std::uint64_t>(f));
    const LinearModel model = fit_unconstrained(augmented.subset(train_rows), spec, fold_cfg);
    for (std::size_t i : held_rows) pt.p_plus[i] = sigmoid(model.score(augmented.row(i)));
  }
  return pt;
}

ProbabilityTable pretrain_probabilities(const Dataset& noisy, int folds, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = 50;
  return pretrain_probabilities(noisy, folds, seed, cfg);
}

Thresholds self_confidence_thresholds(const ProbabilityTable& pt, const Dataset& noisy) {
  require(pt.p_plus.size() == noisy.size(), "thresholds: probability table does not cover the dataset");
  const std::size_t m = noisy.num_groups();
  std::vector<std::array<double, 2>> sum(m, {0.0, 0.0});
  std::vector<std::array<std::size_t, 2>> count(m, {0, 0});
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    const auto z = static_cast<std::size_t>(noisy.group(i));
    const int l = noisy.label(i);
    sum[z][class_index(l)] += pt.p(i, l);
    ++count[z][class_index(l)];
  }
  Thresholds th;
  th.t.resize(m);
  for (std::size_t z = 0; z < m; ++z)
    for (std::size_t c = 0; c < 2; ++c) {
      if (count[z][c] == 0)
        fail(ErrorCode::Estimation, "thresholds: group '" + noisy.group_names()[z] + "' has no examples with noisy label " +
                                        (c == 0 ? "+1" : "-1") + "; threshold undefined");
      th.t[z][c] = sum[z][c] / static_cast<double>(count[z][c]);
    }
  return th;
}

ConfidentJoint confident_joint(const ProbabilityTable& pt, const Dataset& noisy, const Thresholds& thresholds) {
  require(pt.p_plus.size() == noisy.size(), "confident joint: probability table does not cover the dataset");
  const std::size_t m = noisy.num_groups();
  require(thresholds.t.size() == m, "confident joint: thresholds do not cover every group");
  ConfidentJoint cj;
  cj.thresholds = thresholds;
  cj.counts.assign(m, ConfidentJoint::Table{});
  std::vector<std::array<double, 2>> noisy_size(m, {0.0, 0.0});
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    const int z = noisy.group(i);
    const int k = noisy.label(i);
    noisy_size[static_cast<std::size_t>(z)][class_index(k)] += 1.0;
    const double margin_pos = pt.p(i, kPositive) - thresholds.at(kPositive, z);
    const double margin_neg = pt.p(i, kNegative) - thresholds.at(kNegative, z);
    int latent = 0;
    if (margin_pos >= 0.0 && margin_neg >= 0.0) {
      latent = margin_pos > margin_neg ? kPositive : margin_neg > margin_pos ? kNegative : k;
    } else if (margin_pos >= 0.0) {
      latent = kPositive;
    } else if (margin_neg >= 0.0) {
      latent = kNegative;
    } else {
      continue;
    }
    cj.counts[static_cast<std::size_t>(z)][class_index(k)][class_index(latent)] += 1.0;
  }
  cj.joint.assign(m, ConfidentJoint::Table{});
  for (std::size_t z = 0; z < m; ++z) {
    auto& q = cj.joint[z];
    double total = 0.0;
    for (std::size_t k = 0; k < 2; ++k) {
      const double row = cj.counts[z][k][0] + cj.counts[z][k][1];
      if (row == 0.0) continue;
      for (std::size_t l = 0; l < 2; ++l) {
        q[k][l] = cj.counts[z][k][l] / row * noisy_size[z][k];
        total += q[k][l];
      }
    }
    if (total == 0.0)
      fail(ErrorCode::Estimation, "confident joint: group '" + noisy.group_names()[z] + "' has no confident examples");
    for (auto& row : q)
      for (double& v : row) v /= total;
  }
  return cj;
}

NoiseEstimate estimate_noise(const ConfidentJoint& cj, const std::vector<std::string>& group_names) {
  require(group_names.size() == cj.joint.size(), "estimate_noise: group names do not match the joint");
  constexpr std::size_t P = 0, N = 1;
  NoiseEstimate out;
  out.group_names = group_names;
  for (std::size_t z = 0; z < cj.joint.size(); ++z) {
    const auto& q = cj.joint[z];
    const double den_plus = q[N][P] + q[P][P];
    const double den_minus = q[P][N] + q[N][N];
    if (!(den_plus > 0.0) || !(den_minus > 0.0))
      fail(ErrorCode::Estimation, "estimate_noise: group '" + group_names[z] + "' has no confident " +
                                      (den_plus > 0.0 ? "negatives" : "positives"));
    GroupEstimate g;
    const double raw_plus = q[N][P] / den_plus;
    const double raw_minus = q[P][N] / den_minus;
    g.eps_plus = std::clamp(raw_plus, 0.0, kEpsClipCeiling);
    g.eps_minus = std::clamp(raw_minus, 0.0, kEpsClipCeiling);
    g.clipped = g.eps_plus != raw_plus || g.eps_minus != raw_minus;
    const double sum = g.eps_plus + g.eps_minus;
    if (sum > 1.0 - kDeltaFloor) {
      const double scale = (1.0 - kDeltaFloor) / sum;
      g.eps_plus *= scale;
      g.eps_minus *= scale;
      g.clipped = true;
    }
    const double total = q[P][P] + q[P][N] + q[N][P] + q[N][N];
    g.prior_plus = std::clamp((q[P][P] + q[N][P]) / total, 1e-3, 1.0 - 1e-3);
    out.groups.push_back(g);
  }
  out.validate();
  return out;
}

NoiseEstimate estimate_noise_from_data(const Dataset& noisy, const EstimatorConfig& cfg) {
  TrainConfig tc;
  tc.epochs = cfg.epochs;
  const ProbabilityTable pt = pretrain_probabilities(noisy, cfg.folds, cfg.seed, tc);
  const Thresholds th = self_confidence_thresholds(pt, noisy);
  return estimate_noise(confident_joint(pt, noisy, th), noisy.group_names());
}

}  // namespace noisefair
