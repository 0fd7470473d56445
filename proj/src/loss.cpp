#include "noisefair/loss.hpp"

#include <cmath>

#include "noisefair/dataset.hpp"
#include "noisefair/error.hpp"
#include "noisefair/model.hpp"
#include "noisefair/noise_estimation.hpp"
#include "noisefair/rng.hpp"

namespace noisefair {

namespace {

// log(1 + exp(m)) without overflow.
double softplus(double m) { return m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m)); }

double check_denominator(double eps_plus, double eps_minus) {
  const double delta = 1.0 - eps_plus - eps_minus;
  if (!(delta > 0.0)) fail(ErrorCode::InvalidArgument, "surrogate loss: 1 - eps_plus - eps_minus must be > 0");
  return delta;
}

}  // namespace

double base_loss(const LossKind& kind, double score, int label) {
  if (kind.tag == LossTag::ZeroOne) {
    const int pred = score >= 0.0 ? kPositive : kNegative;
    return pred != label ? 1.0 : 0.0;
  }
  const double v = softplus(-static_cast<double>(label) * score);
  return std::min(v, kind.max_value);
}

double base_loss_derivative(const LossKind& kind, double score, int label) {
  if (kind.tag == LossTag::ZeroOne) return 0.0;
  const double y = static_cast<double>(label);
  if (std::isfinite(kind.max_value) && softplus(-y * score) >= kind.max_value) return 0.0;
  return -y * sigmoid(-y * score);
}

double surrogate_loss(const LossKind& kind, double score, int noisy_label, double eps_plus, double eps_minus) {
  const double delta = check_denominator(eps_plus, eps_minus);
  const double pos = base_loss(kind, score, kPositive);
  const double neg = base_loss(kind, score, kNegative);
  if (noisy_label == kPositive) return ((1.0 - eps_minus) * pos - eps_plus * neg) / delta;
  return ((1.0 - eps_plus) * neg - eps_minus * pos) / delta;
}

double surrogate_loss_derivative(const LossKind& kind, double score, int noisy_label, double eps_plus,
                                 double eps_minus) {
  const double delta = check_denominator(eps_plus, eps_minus);
  const double pos = base_loss_derivative(kind, score, kPositive);
  const double neg = base_loss_derivative(kind, score, kNegative);
  if (noisy_label == kPositive) return ((1.0 - eps_minus) * pos - eps_plus * neg) / delta;
  return ((1.0 - eps_plus) * neg - eps_minus * pos) / delta;
}

PeerPairing make_peer_pairing(const Dataset& ds, std::uint64_t seed) {
  const std::size_t m = ds.num_groups();
  std::vector<std::vector<std::uint32_t>> members(m);
  std::vector<std::uint32_t> position(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto& g = members[static_cast<std::size_t>(ds.group(i))];
    position[i] = static_cast<std::uint32_t>(g.size());
    g.push_back(static_cast<std::uint32_t>(i));
  }
  for (std::size_t z = 0; z < m; ++z)
    if (members[z].size() < 2)
      fail(ErrorCode::InvalidArgument, "peer pairing: group '" + ds.group_names()[z] + "' has a single example");

  const Philox rng(seed);
  PeerPairing out;
  out.first.resize(ds.size());
  out.second.resize(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& g = members[static_cast<std::size_t>(ds.group(i))];
    auto draw = [&](std::uint64_t counter) {
      std::uint64_t k = rng.below(g.size() - 1, streams::kPeer, counter);
      if (k >= position[i]) ++k;  // skip i itself
      return g[k];
    };
    out.first[i] = draw(2 * i);
    out.second[i] = draw(2 * i + 1);
  }
  return out;
}

double group_peer_loss(const LossKind& kind, std::span<const double> scores, std::span<const int> noisy_labels,
                       std::span<const int> groups, const NoiseEstimate& est, const PeerConfig& cfg, std::size_t i) {
  const auto z = static_cast<std::size_t>(groups[i]);
  require(z < est.num_groups(), "group peer loss: estimate does not cover group " + std::to_string(z));
  require(i < cfg.pairing.first.size(), "group peer loss: no peer pair for example " + std::to_string(i));
  const double delta = est[z].delta();
  if (delta < kDeltaFloor) fail(ErrorCode::InvalidArgument, "group peer loss: delta below floor");
  const std::size_t i1 = cfg.pairing.first[i];
  const std::size_t i2 = cfg.pairing.second[i];
  const double own = base_loss(kind, scores[i], noisy_labels[i]);
  const double peer = base_loss(kind, scores[i1], noisy_labels[i2]);
  return (own - cfg.alpha * peer) / delta;
}

double default_alpha(const NoiseEstimate& est, std::span<const LabelCounts> noisy_label_counts) {
  require(noisy_label_counts.size() == est.num_groups(), "default_alpha: label counts must cover every group");
  double n = 0.0, noisy_pos = 0.0, delta = 0.0, prior = 0.0;
  for (std::size_t z = 0; z < est.num_groups(); ++z) {
    const double nz = static_cast<double>(noisy_label_counts[z].positives + noisy_label_counts[z].negatives);
    n += nz;
    noisy_pos += static_cast<double>(noisy_label_counts[z].positives);
    delta += nz * est[z].delta();
    prior += nz * est[z].prior_plus;
  }
  require(n > 0.0, "default_alpha: no examples");
  delta /= n;
  prior /= n;
  const double noisy_gap = 2.0 * (noisy_pos / n) - 1.0;
  if (std::abs(noisy_gap) < 1e-6) return 1.0;
  return 1.0 - delta * (2.0 * prior - 1.0) / noisy_gap;
}

}  // namespace noisefair
