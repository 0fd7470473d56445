#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "noisefair/dataset.hpp"
#include "noisefair/fairness.hpp"
#include "noisefair/loss.hpp"
#include "noisefair/model.hpp"
#include "noisefair/noise_estimation.hpp"

namespace noisefair {

enum class Objective { Plain, Surrogate, GroupPeer };

struct LossSpec {
  Objective objective = Objective::Plain;
  LossKind base = LossKind::logistic();
  std::optional<NoiseEstimate> estimate;  // Surrogate and GroupPeer
  double alpha = 1.0;                     // GroupPeer

  void validate(const Dataset& ds) const;
  std::string describe() const;
};

struct TrainConfig {
  int outer_rounds = 50;
  double multiplier_bound = 100.0;
  double multiplier_step = 3.0;
  double learning_rate = 0.1;  // decays as 1/sqrt(epoch)
  int epochs = 200;
  int batch_size = 256;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
  bool deterministic_output = true;

  void validate() const;
  nlohmann::json to_json() const;
  // Overrides from a JSON object; unknown keys are rejected.
  void apply_json(const nlohmann::json& j);
  std::string fingerprint() const;
};

// Mean per-example loss + multiplier costs + L2 penalty on the non-intercept
// weights. `sigmoid_costs[i]` multiplies sigmoid(score_i); it carries the
// Lagrangian's per-example share of the relaxed constraint statistics.
class TrainingObjective {
 public:
  TrainingObjective(const Dataset& ds, const LossSpec& spec, double l2, std::span<const double> sigmoid_costs = {});

  void set_pairing(const PeerPairing* pairing) { pairing_ = pairing; }

  // Value and gradient averaged over `rows`; all rows when `rows` is empty.
  double value(std::span<const double> w, std::span<const std::size_t> rows = {}) const;
  double value_and_gradient(std::span<const double> w, std::span<double> grad,
                            std::span<const std::size_t> rows = {}) const;

 private:
  double example_loss(std::span<const double> w, std::size_t i, std::span<double> grad, bool want_grad) const;

  const Dataset& ds_;
  const LossSpec& spec_;
  double l2_;
  std::span<const double> costs_;
  const PeerPairing* pairing_ = nullptr;
};

// Minibatch gradient descent from all-zero weights. Peer pairs are redrawn
// each epoch from the seed.
LinearModel fit_unconstrained(const Dataset& ds, const LossSpec& spec, const TrainConfig& cfg);
LinearModel fit_cost_sensitive(const Dataset& ds, const LossSpec& spec, const TrainConfig& cfg,
                               std::span<const double> sigmoid_costs, std::uint64_t seed);

struct ConstrainedFit {
  RandomizedClassifier classifier;
  std::vector<LinearModel> components;        // one best response per round
  std::vector<double> final_multipliers;
  std::vector<double> train_violation;        // hard corrected violation per round
  std::size_t selected = 0;                   // index chosen when deterministic
  bool feasible_found = false;
  double max_multiplier_seen = 0.0;
};

// Lagrangian reduction: best-response fits against projected-gradient
// multipliers clipped to [0, B]. `validation` (optional) drives the
// deterministic single-component selection.
ConstrainedFit fit_constrained(const Dataset& ds, const LossSpec& spec, const ConstraintSpec& cspec,
                               const TrainConfig& cfg, const Dataset* validation = nullptr);

// Mean surrogate loss of a (randomized) classifier on noisy data.
double surrogate_risk(const RandomizedClassifier& c, const Dataset& noisy, const NoiseEstimate& est,
                      const LossKind& base = LossKind::logistic());
// Violation of the corrected constraint statistics on `ds`.
double corrected_violation(const RandomizedClassifier& c, const Dataset& ds, const ConstraintSpec& cspec);

// Index of the candidate with the lowest surrogate validation risk, ties
// broken by the surrogate-constraint violation.
std::size_t select_model(std::span<const RandomizedClassifier> candidates, const Dataset& noisy_validation,
                         const NoiseEstimate& est, Metric metric);

struct AlphaTrial {
  double alpha = 0.0;
  bool ok = false;
  std::string error;
  double violation = 0.0;
  double validation_loss = 0.0;
};

struct AlphaTuning {
  double best_alpha = 0.0;
  std::vector<AlphaTrial> trials;
  RandomizedClassifier best_classifier;
};

// Trains the group-peer pipeline per grid point and picks alpha by
// (violation above delta, then surrogate validation loss).
AlphaTuning tune_alpha(const Dataset& train, const Dataset& noisy_validation, std::span<const double> grid,
                       const NoiseEstimate& est, const ConstraintSpec& cspec, const TrainConfig& cfg);

}  // namespace noisefair
