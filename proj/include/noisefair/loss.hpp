#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace noisefair {

class Dataset;
struct NoiseEstimate;

enum class LossTag { ZeroOne, Logistic };

// Base loss l(score, label). `max_value` caps the logistic loss (the
// bounded variant used for worst-case excess-risk checks); infinity means
// unclipped. 0-1 loss always has max_value 1.
struct LossKind {
  LossTag tag = LossTag::Logistic;
  double max_value = std::numeric_limits<double>::infinity();

  static LossKind zero_one() { return {LossTag::ZeroOne, 1.0}; }
  static LossKind logistic() { return {}; }
  static LossKind clipped_logistic(double max_value) { return {LossTag::Logistic, max_value}; }
};

double base_loss(const LossKind& kind, double score, int label);
// d/d score of base_loss; 0-1 loss has zero derivative almost everywhere.
double base_loss_derivative(const LossKind& kind, double score, int label);

// Noise-corrected loss whose expectation over the noisy label equals the
// clean loss. Returns negative values for some inputs; callers must not clamp.
double surrogate_loss(const LossKind& kind, double score, int noisy_label, double eps_plus, double eps_minus);
double surrogate_loss_derivative(const LossKind& kind, double score, int noisy_label, double eps_plus,
                                 double eps_minus);

// Per-example peer partners (i1, i2), both drawn uniformly from the
// example's own group excluding itself.
struct PeerPairing {
  std::vector<std::uint32_t> first;   // i1: whose features are scored
  std::vector<std::uint32_t> second;  // i2: whose label is used
};

struct PeerConfig {
  double alpha = 1.0;
  PeerPairing pairing;
};

PeerPairing make_peer_pairing(const Dataset& ds, std::uint64_t seed);

// Group-weighted peer loss of example i:
//   (l(s_i, y_i) - alpha * l(s_{i1}, y_{i2})) / delta_{z_i}
double group_peer_loss(const LossKind& kind, std::span<const double> scores, std::span<const int> noisy_labels,
                       std::span<const int> groups, const NoiseEstimate& est, const PeerConfig& cfg, std::size_t i);

struct LabelCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

// Peer-loss balance parameter from pooled noise and prior estimates.
// `noisy_label_counts` is indexed by group.
double default_alpha(const NoiseEstimate& est, std::span<const LabelCounts> noisy_label_counts);

}  // namespace noisefair
