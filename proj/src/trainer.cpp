#include "noisefair/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "noisefair/error.hpp"
#include "noisefair/rng.hpp"

namespace noisefair {

using nlohmann::json;

void LossSpec::validate(const Dataset& ds) const {
  if (objective == Objective::Plain) return;
  require(estimate.has_value(), "loss: " + describe() + " needs a noise estimate");
  estimate->validate();
  require(estimate->num_groups() == ds.num_groups(), "loss: noise estimate does not cover every group");
  if (objective == Objective::GroupPeer) require(alpha >= 0.0, "loss: alpha must be >= 0");
}

std::string LossSpec::describe() const {
  switch (objective) {
    case Objective::Plain: return "plain";
    case Objective::Surrogate: return "surrogate";
    case Objective::GroupPeer: return "group_peer";
  }
  return "?";
}

void TrainConfig::validate() const {
  require(outer_rounds >= 1, "train config: outer_rounds must be >= 1");
  require(multiplier_bound > 0.0, "train config: multiplier_bound must be > 0");
  require(multiplier_step > 0.0, "train config: multiplier_step must be > 0");
  require(learning_rate > 0.0, "train config: learning_rate must be > 0");
  require(epochs >= 0, "train config: epochs must be >= 0");
  require(batch_size >= 1, "train config: batch_size must be >= 1");
  require(l2 >= 0.0, "train config: l2 must be >= 0");
}

json TrainConfig::to_json() const {
  return json{{"outer_rounds", outer_rounds}, {"multiplier_bound", multiplier_bound},
              {"multiplier_step", multiplier_step}, {"learning_rate", learning_rate},
              {"epochs", epochs}, {"batch_size", batch_size},
              {"l2", l2}, {"seed", seed},
              {"deterministic_output", deterministic_output}};
}

void TrainConfig::apply_json(const json& j) {
  require(j.is_object(), "train config: expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    const auto& v = it.value();
    if (k == "outer_rounds") outer_rounds = v.get<int>();
    else if (k == "multiplier_bound") multiplier_bound = v.get<double>();
    else if (k == "multiplier_step") multiplier_step = v.get<double>();
    else if (k == "learning_rate") learning_rate = v.get<double>();
    else if (k == "epochs") epochs = v.get<int>();
    else if (k == "batch_size") batch_size = v.get<int>();
    else if (k == "l2") l2 = v.get<double>();
    else if (k == "seed") seed = v.get<std::uint64_t>();
    else if (k == "deterministic_output") deterministic_output = v.get<bool>();
    else fail(ErrorCode::InvalidArgument, "train config: unknown key '" + k + "'");
  }
  validate();
}

std::string TrainConfig::fingerprint() const {
  // FNV-1a over the canonical JSON dump.
  const std::string text = to_json().dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

TrainingObjective::TrainingObjective(const Dataset& ds, const LossSpec& spec, double l2,
                                     std::span<const double> sigmoid_costs)
    : ds_(ds), spec_(spec), l2_(l2), costs_(sigmoid_costs) {
  spec.validate(ds);
  require(costs_.empty() || costs_.size() == ds.size(), "objective: cost vector length mismatch");
}

double TrainingObjective::example_loss(std::span<const double> w, std::size_t i, std::span<double> grad,
                                       bool want_grad) const {
  const auto x = ds_.row(i);
  const std::size_t cols = ds_.cols();
  double s = 0.0;
  for (std::size_t c = 0; c < cols; ++c) s += w[c] * x[c];
  const int y = ds_.label(i);
  const auto z = static_cast<std::size_t>(ds_.group(i));
  double loss = 0.0;
  double d_own = 0.0;  // derivative with respect to s
  switch (spec_.objective) {
    case Objective::Plain:
      loss = base_loss(spec_.base, s, y);
      if (want_grad) d_own = base_loss_derivative(spec_.base, s, y);
      break;
    case Objective::Surrogate: {
      const auto& e = (*spec_.estimate)[z];
      loss = surrogate_loss(spec_.base, s, y, e.eps_plus, e.eps_minus);
      if (want_grad) d_own = surrogate_loss_derivative(spec_.base, s, y, e.eps_plus, e.eps_minus);
      break;
    }
    case Objective::GroupPeer: {
      require(pairing_ != nullptr, "objective: group peer loss needs a pairing");
      const double inv_delta = 1.0 / (*spec_.estimate)[z].delta();
      const std::size_t i1 = pairing_->first[i];
      const std::size_t i2 = pairing_->second[i];
      const auto xp = ds_.row(i1);
      double sp = 0.0;
      for (std::size_t c = 0; c < cols; ++c) sp += w[c] * xp[c];
      const int yp = ds_.label(i2);
      loss = inv_delta * (base_loss(spec_.base, s, y) - spec_.alpha * base_loss(spec_.base, sp, yp));
      if (want_grad) {
        d_own = inv_delta * base_loss_derivative(spec_.base, s, y);
        const double d_peer = -inv_delta * spec_.alpha * base_loss_derivative(spec_.base, sp, yp);
        for (std::size_t c = 0; c < cols; ++c) grad[c] += d_peer * xp[c];
      }
      break;
    }
  }
  if (!costs_.empty() && costs_[i] != 0.0) {
    const double p = sigmoid(s);
    loss += costs_[i] * p;
    if (want_grad) d_own += costs_[i] * p * (1.0 - p);
  }
  if (want_grad)
    for (std::size_t c = 0; c < cols; ++c) grad[c] += d_own * x[c];
  return loss;
}

double TrainingObjective::value(std::span<const double> w, std::span<const std::size_t> rows) const {
  std::vector<double> unused;
  double total = 0.0;
  const std::size_t count = rows.empty() ? ds_.size() : rows.size();
  for (std::size_t k = 0; k < count; ++k) total += example_loss(w, rows.empty() ? k : rows[k], unused, false);
  double penalty = 0.0;
  for (std::size_t c = 1; c < w.size(); ++c) penalty += w[c] * w[c];
  return total / static_cast<double>(count) + 0.5 * l2_ * penalty;
}

double TrainingObjective::value_and_gradient(std::span<const double> w, std::span<double> grad,
                                             std::span<const std::size_t> rows) const {
  require(grad.size() == w.size() && w.size() == ds_.cols(), "objective: weight/gradient size mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);
  double total = 0.0;
  const std::size_t count = rows.empty() ? ds_.size() : rows.size();
  for (std::size_t k = 0; k < count; ++k) total += example_loss(w, rows.empty() ? k : rows[k], grad, true);
  const double inv = 1.0 / static_cast<double>(count);
  double penalty = 0.0;
  for (std::size_t c = 0; c < w.size(); ++c) {
    grad[c] *= inv;
    if (c >= 1) {
      grad[c] += l2_ * w[c];
      penalty += w[c] * w[c];
    }
  }
  return total * inv + 0.5 * l2_ * penalty;
}

LinearModel fit_cost_sensitive(const Dataset& ds, const LossSpec& spec, const TrainConfig& cfg,
                               std::span<const double> sigmoid_costs, std::uint64_t seed) {
  cfg.validate();
  TrainingObjective objective(ds, spec, cfg.l2, sigmoid_costs);
  const Philox rng(seed);
  std::vector<double> w(ds.cols(), 0.0), grad(ds.cols(), 0.0);
  std::vector<std::size_t> order(ds.size());
  PeerPairing pairing;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, rng, streams::kShuffle, static_cast<std::uint64_t>(epoch));
    if (spec.objective == Objective::GroupPeer) {
      pairing = make_peer_pairing(ds, derive_seed(seed, static_cast<std::uint64_t>(epoch)));
      objective.set_pairing(&pairing);
    }
    const double lr = cfg.learning_rate / std::sqrt(static_cast<double>(epoch));
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      const double v = objective.value_and_gradient(w, grad, std::span(order).subspan(start, len));
      for (std::size_t c = 0; c < w.size(); ++c) {
        w[c] -= lr * grad[c];
      }
      if (!std::isfinite(v) || !std::all_of(w.begin(), w.end(), [](double x) { return std::isfinite(x); }))
        fail(ErrorCode::Divergence, "training diverged (non-finite loss or weights) at epoch " + std::to_string(epoch));
    }
  }
  return LinearModel{std::move(w)};
}

LinearModel fit_unconstrained(const Dataset& ds, const LossSpec& spec, const TrainConfig& cfg) {
  return fit_cost_sensitive(ds, spec, cfg, {}, cfg.seed);
}

namespace {

struct ConstraintIndex {
  std::vector<Metric> rows;
  std::size_t m = 0;
  // Ordered pairs (z, z'), z != z'.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  ConstraintIndex(Metric metric, std::size_t groups) : rows(metric_rows(metric)), m(groups) {
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b)
        if (a != b) pairs.emplace_back(a, b);
  }
  std::size_t size() const { return rows.size() * pairs.size(); }
};

LabelFlavor flavor_for(const ConstraintSpec& cspec) {
  return cspec.correction == Correction::None ? LabelFlavor::Clean : LabelFlavor::Noisy;
}

StatRows hard_statistics(const RandomizedClassifier& c, const Dataset& ds, const ConstraintSpec& cspec) {
  const auto p = positive_probabilities(c, ds);
  return constraint_statistics(confusion(p, ds, flavor_for(cspec)), cspec);
}

// Loss used to rank components: the unbiased surrogate risk when an
// estimate is available, otherwise the plain logistic risk.
double selection_loss(const RandomizedClassifier& c, const Dataset& ds, const LossSpec& spec) {
  if (spec.estimate && spec.objective != Objective::Plain) return surrogate_risk(c, ds, *spec.estimate);
  double total = 0.0;
  for (std::size_t k = 0; k < c.components.size(); ++k) {
    const auto s = scores(c.components[k], ds);
    double sum = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) sum += base_loss(LossKind::logistic(), s[i], ds.label(i));
    total += c.weights[k] * sum / static_cast<double>(ds.size());
  }
  return total;
}

}  // namespace

ConstrainedFit fit_constrained(const Dataset& ds, const LossSpec& spec, const ConstraintSpec& cspec,
                               const TrainConfig& cfg, const Dataset* validation) {
  cfg.validate();
  cspec.validate();
  spec.validate(ds);
  if (cspec.estimate) require(cspec.estimate->num_groups() == ds.num_groups(), "constraint: estimate/group mismatch");
  const ConstraintIndex idx(cspec.metric, ds.num_groups());
  require(idx.m >= 2, "constrained fit: needs at least two groups");

  // Fails early when a group lacks positives or negatives.
  (void)confusion(std::vector<double>(ds.size(), 0.0), ds, flavor_for(cspec));

  std::vector<double> n_pos(idx.m, 0.0), n_neg(idx.m, 0.0), n_all(idx.m, 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto z = static_cast<std::size_t>(ds.group(i));
    (ds.label(i) == kPositive ? n_pos : n_neg)[z] += 1.0;
    n_all[z] += 1.0;
  }
  std::vector<std::vector<StatCoefficients>> coef(idx.rows.size());
  for (std::size_t r = 0; r < idx.rows.size(); ++r)
    for (std::size_t z = 0; z < idx.m; ++z) coef[r].push_back(statistic_coefficients(cspec, idx.rows[r], z));

  std::vector<double> lambda(idx.size(), 0.0);
  std::vector<double> costs(ds.size(), 0.0);
  ConstrainedFit out;
  const double n = static_cast<double>(ds.size());
  for (int t = 0; t < cfg.outer_rounds; ++t) {
    // Net multiplier on each group's statistic per row.
    std::vector<std::vector<double>> net(idx.rows.size(), std::vector<double>(idx.m, 0.0));
    bool any = false;
    for (std::size_t r = 0; r < idx.rows.size(); ++r)
      for (std::size_t p = 0; p < idx.pairs.size(); ++p) {
        const double l = lambda[r * idx.pairs.size() + p];
        net[r][idx.pairs[p].first] += l;
        net[r][idx.pairs[p].second] -= l;
        any = any || l != 0.0;
      }
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto z = static_cast<std::size_t>(ds.group(i));
      double c = 0.0;
      for (std::size_t r = 0; r < idx.rows.size(); ++r) {
        const auto& k = coef[r][z];
        const double per_example = (ds.label(i) == kPositive ? k.tpr / n_pos[z] : k.fpr / n_neg[z]) +
                                   k.positive_rate / n_all[z];
        c += net[r][z] * per_example;
      }
      costs[i] = n * c;
    }
    const std::uint64_t round_seed = t == 0 ? cfg.seed : derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
    LinearModel h = any ? fit_cost_sensitive(ds, spec, cfg, costs, round_seed)
                        : fit_cost_sensitive(ds, spec, cfg, {}, round_seed);

    const StatRows stats = hard_statistics(RandomizedClassifier::single(h), ds, cspec);
    out.train_violation.push_back(violation(stats));
    for (std::size_t r = 0; r < idx.rows.size(); ++r)
      for (std::size_t p = 0; p < idx.pairs.size(); ++p) {
        const auto [a, b] = idx.pairs[p];
        double& l = lambda[r * idx.pairs.size() + p];
        l = std::clamp(l + cfg.multiplier_step * (stats[r][a] - stats[r][b] - cspec.delta), 0.0, cfg.multiplier_bound);
        out.max_multiplier_seen = std::max(out.max_multiplier_seen, l);
      }
    out.components.push_back(std::move(h));
  }
  out.final_multipliers = lambda;

  for (double v : out.train_violation) out.feasible_found = out.feasible_found || v <= cspec.delta;
  // Feasibility on training statistics first, then the validation loss.
  const Dataset& scoring = validation ? *validation : ds;
  double best_excess = INFINITY, best_loss = INFINITY;
  for (std::size_t k = 0; k < out.components.size(); ++k) {
    const double excess = std::max(0.0, out.train_violation[k] - cspec.delta);
    const double loss = selection_loss(RandomizedClassifier::single(out.components[k]), scoring, spec);
    if (excess < best_excess || (excess == best_excess && loss < best_loss)) {
      best_excess = excess;
      best_loss = loss;
      out.selected = k;
    }
  }
  if (cfg.deterministic_output) {
    out.classifier = RandomizedClassifier::single(out.components[out.selected]);
  } else {
    out.classifier.components = out.components;
    out.classifier.weights.assign(out.components.size(), 1.0 / static_cast<double>(out.components.size()));
  }
  return out;
}

double surrogate_risk(const RandomizedClassifier& c, const Dataset& noisy, const NoiseEstimate& est,
                      const LossKind& base) {
  require(est.num_groups() == noisy.num_groups(), "surrogate risk: estimate does not cover every group");
  double total = 0.0;
  for (std::size_t k = 0; k < c.components.size(); ++k) {
    const auto s = scores(c.components[k], noisy);
    double sum = 0.0;
    for (std::size_t i = 0; i < noisy.size(); ++i) {
      const auto& e = est[static_cast<std::size_t>(noisy.group(i))];
      sum += surrogate_loss(base, s[i], noisy.label(i), e.eps_plus, e.eps_minus);
    }
    total += c.weights[k] * sum / static_cast<double>(noisy.size());
  }
  return total;
}

double corrected_violation(const RandomizedClassifier& c, const Dataset& ds, const ConstraintSpec& cspec) {
  cspec.validate();
  return violation(hard_statistics(c, ds, cspec));
}

std::size_t select_model(std::span<const RandomizedClassifier> candidates, const Dataset& noisy_validation,
                         const NoiseEstimate& est, Metric metric) {
  if (candidates.empty()) fail(ErrorCode::InvalidArgument, "select_model: no candidates");
  const ConstraintSpec cspec{metric, 0.0, Correction::Surrogate, est};
  std::size_t best = 0;
  double best_loss = INFINITY, best_violation = INFINITY;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const double loss = surrogate_risk(candidates[k], noisy_validation, est);
    const double viol = corrected_violation(candidates[k], noisy_validation, cspec);
    const bool tie = std::abs(loss - best_loss) <= 1e-12;
    if ((!tie && loss < best_loss) || (tie && viol < best_violation)) {
      best = k;
      best_loss = loss;
      best_violation = viol;
    }
  }
  return best;
}

AlphaTuning tune_alpha(const Dataset& train, const Dataset& noisy_validation, std::span<const double> grid,
                       const NoiseEstimate& est, const ConstraintSpec& cspec, const TrainConfig& cfg) {
  require(!grid.empty(), "tune_alpha: empty grid");
  AlphaTuning out;
  double best_excess = INFINITY, best_loss = INFINITY;
  bool any = false;
  for (double alpha : grid) {
    AlphaTrial trial;
    trial.alpha = alpha;
    try {
      LossSpec spec{Objective::GroupPeer, LossKind::logistic(), est, alpha};
      const ConstrainedFit fit = fit_constrained(train, spec, cspec, cfg, &noisy_validation);
      trial.violation = corrected_violation(fit.classifier, noisy_validation, cspec);
      trial.validation_loss = surrogate_risk(fit.classifier, noisy_validation, est);
      trial.ok = true;
      const double excess = std::max(0.0, trial.violation - cspec.delta);
      if (!any || excess < best_excess || (excess == best_excess && trial.validation_loss < best_loss)) {
        any = true;
        best_excess = excess;
        best_loss = trial.validation_loss;
        out.best_alpha = alpha;
        out.best_classifier = fit.classifier;
      }
    } catch (const Error& e) {
      trial.error = e.what();
    }
    out.trials.push_back(trial);
  }
  if (!any) fail(ErrorCode::Divergence, "tune_alpha: every grid point failed; first error: " + out.trials.front().error);
  return out;
}

}  // namespace noisefair
