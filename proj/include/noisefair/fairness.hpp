#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "noisefair/dataset.hpp"
#include "noisefair/noise_estimation.hpp"

namespace noisefair {

enum class LabelFlavor { Clean, Noisy };
enum class Metric { TPR, FPR, EqualOdds };
enum class Correction { None, Surrogate, Peer };
// Relation between clean and noisy rates assumed by corrected constraints.
// LabelSufficient: P(f | noisy, y, z) = P(f | noisy, z); the correction
// tables are exact there. ClassConditional: flips depend only on (y, z), as
// inject_noise draws them; the exact inverse then also needs the prior.
enum class NoiseModel { LabelSufficient, ClassConditional };

struct GroupRates {
  double tpr = 0.0;
  double fpr = 0.0;
  double positive_rate = 0.0;  // P(f = +1 | Z = z)
  std::size_t positive_count = 0;
  std::size_t negative_count = 0;
};

struct GroupConfusion {
  std::vector<GroupRates> groups;
  LabelFlavor flavor = LabelFlavor::Clean;

  nlohmann::json to_json(const std::vector<std::string>& group_names) const;
};

// `positive_prob[i]` is the probability the classifier outputs +1 on row i
// (0 or 1 for a deterministic model). Labels are read from `ds`; `flavor`
// tags whether they are clean or noisy.
GroupConfusion confusion(std::span<const double> positive_prob, const Dataset& ds, LabelFlavor flavor);

// Rows are metric rows (TPR and/or FPR), columns are groups.
using StatRows = std::vector<std::vector<double>>;

std::vector<Metric> metric_rows(Metric metric);
Metric parse_metric(const std::string& s);
std::string to_string(Metric m);
Correction parse_correction(const std::string& s);
std::string to_string(Correction c);
NoiseModel parse_noise_model(const std::string& s);
std::string to_string(NoiseModel m);

struct ConstraintSpec {
  Metric metric = Metric::EqualOdds;
  double delta = 0.02;
  Correction correction = Correction::None;
  std::optional<NoiseEstimate> estimate;  // required unless correction is None
  NoiseModel noise_model = NoiseModel::LabelSufficient;
  void validate() const;
};

StatRows raw_statistic(const GroupConfusion& gc, Metric metric);
StatRows surrogate_statistic_sl(const GroupConfusion& gc, const NoiseEstimate& est, Metric metric);
// Uses the general-prior form; reduces to the balanced table when priors are 1/2.
StatRows surrogate_statistic_peer(std::span<const double> positive_rate, const GroupConfusion& gc,
                                  const NoiseEstimate& est, Metric metric);
StatRows constraint_statistics(const GroupConfusion& gc, const ConstraintSpec& spec);

// The per-group constraint statistic is linear in (noisy TPR, noisy FPR,
// positive rate); these are its coefficients for one group and row.
struct StatCoefficients {
  double tpr = 0.0;
  double fpr = 0.0;
  double positive_rate = 0.0;
  double constant = 0.0;
};
StatCoefficients statistic_coefficients(const ConstraintSpec& spec, Metric row, std::size_t z);

struct ClassRates {
  double tpr = 0.0;
  double fpr = 0.0;
};
// Clean rates from noisy-label rates under known flip rates.
ClassRates lemma1_correct(ClassRates noisy, GroupNoise eps);
// Inverse map: noisy-label rates implied by clean rates.
ClassRates lemma1_uncorrect(ClassRates clean, GroupNoise eps);
// Clean rates from noisy-label rates under class-conditional flips; both
// corrections share this map under NoiseModel::ClassConditional.
ClassRates class_conditional_correct(ClassRates noisy, const GroupEstimate& e);
ClassRates class_conditional_uncorrect(ClassRates clean, const GroupEstimate& e);
StatRows class_conditional_statistic(const GroupConfusion& gc, const NoiseEstimate& est, Metric metric);

// Largest pairwise gap over rows and groups.
double violation(const StatRows& stats);

std::pair<double, double> theorem3_gap(ClassRates noisy, GroupNoise eps_z, GroupNoise eps_other);

}  // namespace noisefair
