#include "noisefair/fairness.hpp"

#include <algorithm>
#include <cmath>

#include "noisefair/error.hpp"

namespace noisefair {

using nlohmann::json;

namespace {
// P(noisy = +1 | z) implied by the estimate.
double noisy_positive_share(const GroupEstimate& e) {
  return e.prior_plus * (1.0 - e.eps_plus) + (1.0 - e.prior_plus) * e.eps_minus;
}
}  // namespace

json GroupConfusion::to_json(const std::vector<std::string>& group_names) const {
  json rows = json::array();
  const char* tag = flavor == LabelFlavor::Clean ? "clean" : "noisy";
  for (std::size_t z = 0; z < groups.size(); ++z)
    rows.push_back({{"group", group_names.at(z)}, {"tpr", groups[z].tpr}, {"fpr", groups[z].fpr}, {"flavor", tag}});
  return rows;
}

GroupConfusion confusion(std::span<const double> positive_prob, const Dataset& ds, LabelFlavor flavor) {
  require(positive_prob.size() == ds.size(), "confusion: prediction count does not match dataset");
  const std::size_t m = ds.num_groups();
  std::vector<double> tp(m, 0.0), fp(m, 0.0), pred(m, 0.0);
  GroupConfusion gc;
  gc.flavor = flavor;
  gc.groups.resize(m);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto z = static_cast<std::size_t>(ds.group(i));
    pred[z] += positive_prob[i];
    if (ds.label(i) == kPositive) {
      ++gc.groups[z].positive_count;
      tp[z] += positive_prob[i];
    } else {
      ++gc.groups[z].negative_count;
      fp[z] += positive_prob[i];
    }
  }
  for (std::size_t z = 0; z < m; ++z) {
    auto& g = gc.groups[z];
    const char* kind = flavor == LabelFlavor::Clean ? "clean" : "noisy";
    if (g.positive_count == 0)
      fail(ErrorCode::InvalidArgument, std::string("confusion: group '") + ds.group_names()[z] + "' has no " + kind +
                                           " positives (TPR undefined)");
    if (g.negative_count == 0)
      fail(ErrorCode::InvalidArgument, std::string("confusion: group '") + ds.group_names()[z] + "' has no " + kind +
                                           " negatives (FPR undefined)");
    g.tpr = tp[z] / static_cast<double>(g.positive_count);
    g.fpr = fp[z] / static_cast<double>(g.negative_count);
    g.positive_rate = pred[z] / static_cast<double>(g.positive_count + g.negative_count);
  }
  return gc;
}

std::vector<Metric> metric_rows(Metric metric) {
  if (metric == Metric::EqualOdds) return {Metric::TPR, Metric::FPR};
  return {metric};
}

Metric parse_metric(const std::string& s) {
  if (s == "TPR" || s == "tpr") return Metric::TPR;
  if (s == "FPR" || s == "fpr") return Metric::FPR;
  if (s == "EqualOdds" || s == "equal_odds" || s == "eo") return Metric::EqualOdds;
  fail(ErrorCode::InvalidArgument, "unknown fairness metric '" + s + "'");
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::TPR: return "TPR";
    case Metric::FPR: return "FPR";
    case Metric::EqualOdds: return "EqualOdds";
  }
  return "?";
}

Correction parse_correction(const std::string& s) {
  if (s == "none") return Correction::None;
  if (s == "surrogate") return Correction::Surrogate;
  if (s == "peer") return Correction::Peer;
  fail(ErrorCode::InvalidArgument, "unknown correction '" + s + "'");
}

std::string to_string(Correction c) {
  switch (c) {
    case Correction::None: return "none";
    case Correction::Surrogate: return "surrogate";
    case Correction::Peer: return "peer";
  }
  return "?";
}

NoiseModel parse_noise_model(const std::string& s) {
  if (s == "label_sufficient") return NoiseModel::LabelSufficient;
  if (s == "class_conditional") return NoiseModel::ClassConditional;
  fail(ErrorCode::InvalidArgument, "unknown noise model '" + s + "' (expected label_sufficient or class_conditional)");
}

std::string to_string(NoiseModel m) {
  return m == NoiseModel::LabelSufficient ? "label_sufficient" : "class_conditional";
}

void ConstraintSpec::validate() const {
  require(delta >= 0.0, "constraint: delta must be >= 0");
  if (correction != Correction::None) {
    require(estimate.has_value(), "constraint: " + to_string(correction) + " correction needs a noise estimate");
    estimate->validate();
  }
}

StatRows raw_statistic(const GroupConfusion& gc, Metric metric) {
  StatRows out;
  for (Metric row : metric_rows(metric)) {
    std::vector<double> v;
    for (const auto& g : gc.groups) v.push_back(row == Metric::TPR ? g.tpr : g.fpr);
    out.push_back(std::move(v));
  }
  return out;
}

StatRows surrogate_statistic_sl(const GroupConfusion& gc, const NoiseEstimate& est, Metric metric) {
  require(gc.flavor == LabelFlavor::Noisy, "surrogate statistic: expects noisy-label confusion");
  require(est.num_groups() == gc.groups.size(), "surrogate statistic: estimate does not cover every group");
  StatRows out;
  for (Metric row : metric_rows(metric)) {
    std::vector<double> v;
    for (std::size_t z = 0; z < gc.groups.size(); ++z) {
      const ClassRates clean = lemma1_correct({gc.groups[z].tpr, gc.groups[z].fpr}, {est[z].eps_plus, est[z].eps_minus});
      v.push_back(row == Metric::TPR ? clean.tpr : clean.fpr);
    }
    out.push_back(std::move(v));
  }
  return out;
}

StatRows surrogate_statistic_peer(std::span<const double> positive_rate, const GroupConfusion& gc,
                                  const NoiseEstimate& est, Metric metric) {
  require(gc.flavor == LabelFlavor::Noisy, "peer statistic: expects noisy-label confusion");
  require(est.num_groups() == gc.groups.size() && positive_rate.size() == gc.groups.size(),
          "peer statistic: inputs must cover every group");
  StatRows out;
  for (Metric row : metric_rows(metric)) {
    std::vector<double> v;
    for (std::size_t z = 0; z < gc.groups.size(); ++z) {
      const double spread = est[z].delta() * (gc.groups[z].tpr - gc.groups[z].fpr);
      const double prior = est[z].prior_plus;
      v.push_back(row == Metric::TPR ? positive_rate[z] + spread * (1.0 - prior) : positive_rate[z] - spread * prior);
    }
    out.push_back(std::move(v));
  }
  return out;
}

StatRows class_conditional_statistic(const GroupConfusion& gc, const NoiseEstimate& est, Metric metric) {
  require(gc.flavor == LabelFlavor::Noisy, "class-conditional statistic: expects noisy-label confusion");
  require(est.num_groups() == gc.groups.size(), "class-conditional statistic: estimate does not cover every group");
  StatRows out;
  for (Metric row : metric_rows(metric)) {
    std::vector<double> v;
    for (std::size_t z = 0; z < gc.groups.size(); ++z) {
      const ClassRates clean = class_conditional_correct({gc.groups[z].tpr, gc.groups[z].fpr}, est[z]);
      v.push_back(row == Metric::TPR ? clean.tpr : clean.fpr);
    }
    out.push_back(std::move(v));
  }
  return out;
}

StatRows constraint_statistics(const GroupConfusion& gc, const ConstraintSpec& spec) {
  if (spec.correction != Correction::None && spec.noise_model == NoiseModel::ClassConditional)
    return class_conditional_statistic(gc, *spec.estimate, spec.metric);
  switch (spec.correction) {
    case Correction::None: return raw_statistic(gc, spec.metric);
    case Correction::Surrogate: return surrogate_statistic_sl(gc, *spec.estimate, spec.metric);
    case Correction::Peer: {
      std::vector<double> pr;
      for (const auto& g : gc.groups) pr.push_back(g.positive_rate);
      return surrogate_statistic_peer(pr, gc, *spec.estimate, spec.metric);
    }
  }
  return {};
}

StatCoefficients statistic_coefficients(const ConstraintSpec& spec, Metric row, std::size_t z) {
  const bool tpr = row == Metric::TPR;
  if (spec.correction != Correction::None && spec.noise_model == NoiseModel::ClassConditional) {
    const auto& e = (*spec.estimate)[z];
    const double noisy_pos = noisy_positive_share(e);
    const double d = e.delta();
    if (tpr) {
      const double den = e.prior_plus * d;
      return {(1.0 - e.eps_minus) * noisy_pos / den, -e.eps_minus * (1.0 - noisy_pos) / den, 0.0};
    }
    const double den = (1.0 - e.prior_plus) * d;
    return {-e.eps_plus * noisy_pos / den, (1.0 - e.eps_plus) * (1.0 - noisy_pos) / den, 0.0};
  }
  switch (spec.correction) {
    case Correction::None: return tpr ? StatCoefficients{1.0, 0.0, 0.0} : StatCoefficients{0.0, 1.0, 0.0};
    case Correction::Surrogate: {
      const auto& e = (*spec.estimate)[z];
      return tpr ? StatCoefficients{1.0 - e.eps_plus, e.eps_plus, 0.0}
                 : StatCoefficients{e.eps_minus, 1.0 - e.eps_minus, 0.0};
    }
    case Correction::Peer: {
      const auto& e = (*spec.estimate)[z];
      const double d = e.delta();
      return tpr ? StatCoefficients{d * (1.0 - e.prior_plus), -d * (1.0 - e.prior_plus), 1.0}
                 : StatCoefficients{-d * e.prior_plus, d * e.prior_plus, 1.0};
    }
  }
  return {};
}

ClassRates lemma1_correct(ClassRates noisy, GroupNoise eps) {
  return {(1.0 - eps.eps_plus) * noisy.tpr + eps.eps_plus * noisy.fpr,
          eps.eps_minus * noisy.tpr + (1.0 - eps.eps_minus) * noisy.fpr};
}

ClassRates lemma1_uncorrect(ClassRates clean, GroupNoise eps) {
  const double delta = eps.delta();
  require(delta > 0.0, "lemma1_uncorrect: eps_plus + eps_minus must be < 1");
  // Inverse of the 2x2 map [[1-e+, e+], [e-, 1-e-]], determinant delta.
  return {((1.0 - eps.eps_minus) * clean.tpr - eps.eps_plus * clean.fpr) / delta,
          (-eps.eps_minus * clean.tpr + (1.0 - eps.eps_plus) * clean.fpr) / delta};
}

ClassRates class_conditional_correct(ClassRates noisy, const GroupEstimate& e) {
  const double q = noisy_positive_share(e);
  const double d = e.delta();
  require(d > 0.0, "class-conditional correction: eps_plus + eps_minus must be < 1");
  // Invert P(f=+1, noisy=k | z) = sum_y P(noisy=k | y, z) P(y | z) P(f=+1 | y, z).
  const double joint_pos = q * noisy.tpr;
  const double joint_neg = (1.0 - q) * noisy.fpr;
  return {((1.0 - e.eps_minus) * joint_pos - e.eps_minus * joint_neg) / (e.prior_plus * d),
          ((1.0 - e.eps_plus) * joint_neg - e.eps_plus * joint_pos) / ((1.0 - e.prior_plus) * d)};
}

ClassRates class_conditional_uncorrect(ClassRates clean, const GroupEstimate& e) {
  const double q = noisy_positive_share(e);
  const double pi = e.prior_plus;
  return {(pi * (1.0 - e.eps_plus) * clean.tpr + (1.0 - pi) * e.eps_minus * clean.fpr) / q,
          (pi * e.eps_plus * clean.tpr + (1.0 - pi) * (1.0 - e.eps_minus) * clean.fpr) / (1.0 - q)};
}

double violation(const StatRows& stats) {
  double worst = 0.0;
  for (const auto& row : stats) {
    require(row.size() >= 2, "violation: needs at least two groups");
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    worst = std::max(worst, *hi - *lo);
  }
  return worst;
}

std::pair<double, double> theorem3_gap(ClassRates noisy, GroupNoise eps_z, GroupNoise eps_other) {
  const double spread = std::abs(noisy.tpr - noisy.fpr);
  return {spread * std::abs(eps_z.eps_plus - eps_other.eps_plus),
          spread * std::abs(eps_z.eps_minus - eps_other.eps_minus)};
}

}  // namespace noisefair
