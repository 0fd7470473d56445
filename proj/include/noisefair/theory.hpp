#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

#include "noisefair/dataset.hpp"
#include "noisefair/error.hpp"
#include "noisefair/fairness.hpp"
#include "noisefair/trainer.hpp"

namespace noisefair {

using Exact = boost::multiprecision::cpp_rational;

template <typename T>
struct WorldCell {
  int x = 0;
  int y = kPositive;
  int noisy = kPositive;
  int z = 0;
  T p{};
};

// Explicit finite joint distribution over (x, y, noisy y, z). Feature
// values are the indices 0..points-1.
template <typename T>
struct FiniteWorld {
  int points = 0;
  int groups = 0;
  std::vector<WorldCell<T>> cells;
};

// Prediction per feature point, shared by every group.
using DecisionTable = std::vector<int>;

template <typename T>
struct WorldRates {
  T tpr{};
  T fpr{};
  T positive_rate{};
};

namespace detail {
inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }
inline bool near(const Exact& a, const Exact& b, double) { return a == b; }
}  // namespace detail

template <typename T>
void validate_world(const FiniteWorld<T>& w, double tol = 1e-12) {
  require(w.points >= 1 && w.groups >= 1, "finite world: needs at least one point and one group");
  T total{};
  for (const auto& c : w.cells) {
    require(c.x >= 0 && c.x < w.points && c.z >= 0 && c.z < w.groups, "finite world: cell index out of range");
    require((c.y == kPositive || c.y == kNegative) && (c.noisy == kPositive || c.noisy == kNegative),
            "finite world: labels must be +1 or -1");
    require(c.p >= T{}, "finite world: negative probability");
    total += c.p;
  }
  require(detail::near(total, T{1}, tol), "finite world: probabilities do not sum to 1");
}

template <typename T>
T group_mass(const FiniteWorld<T>& w, int z) {
  T m{};
  for (const auto& c : w.cells)
    if (c.z == z) m += c.p;
  return m;
}

// P(Y = +1 | Z = z) under the clean labels.
template <typename T>
T clean_prior(const FiniteWorld<T>& w, int z) {
  T pos{};
  for (const auto& c : w.cells)
    if (c.z == z && c.y == kPositive) pos += c.p;
  return pos / group_mass(w, z);
}

// (eps_plus, eps_minus) of group z: flip probabilities given the clean label.
template <typename T>
std::pair<T, T> flip_rates(const FiniteWorld<T>& w, int z) {
  T pos{}, neg{}, pos_flip{}, neg_flip{};
  for (const auto& c : w.cells) {
    if (c.z != z) continue;
    if (c.y == kPositive) {
      pos += c.p;
      if (c.noisy == kNegative) pos_flip += c.p;
    } else {
      neg += c.p;
      if (c.noisy == kPositive) neg_flip += c.p;
    }
  }
  if (pos == T{} || neg == T{})
    fail(ErrorCode::Hypothesis, "finite world: group " + std::to_string(z) + " lacks a clean class");
  return {pos_flip / pos, neg_flip / neg};
}

template <typename T>
WorldRates<T> world_rates(const FiniteWorld<T>& w, const DecisionTable& f, int z, LabelFlavor flavor) {
  T pos{}, neg{}, tp{}, fp{}, all{}, pred{};
  for (const auto& c : w.cells) {
    if (c.z != z) continue;
    const int y = flavor == LabelFlavor::Clean ? c.y : c.noisy;
    const bool hit = f[static_cast<std::size_t>(c.x)] == kPositive;
    all += c.p;
    if (hit) pred += c.p;
    if (y == kPositive) {
      pos += c.p;
      if (hit) tp += c.p;
    } else {
      neg += c.p;
      if (hit) fp += c.p;
    }
  }
  if (pos == T{} || neg == T{})
    fail(ErrorCode::Hypothesis, "finite world: group " + std::to_string(z) + " lacks a " +
                                    (flavor == LabelFlavor::Clean ? "clean" : "noisy") + " class");
  return {tp / pos, fp / neg, pred / all};
}

// Every +1/-1 table over `points` feature points (at most 5 points).
std::vector<DecisionTable> all_tables(int points);
bool is_constant(const DecisionTable& f);

// Noise depends only on (y, z): P(noisy | x, y, z) is the same for every x.
template <typename T>
bool has_standard_noise(const FiniteWorld<T>& w, double tol = 1e-12) {
  for (int z = 0; z < w.groups; ++z) {
    const auto [ep, em] = flip_rates(w, z);
    for (int x = 0; x < w.points; ++x)
      for (int y : {kPositive, kNegative}) {
        T mass{}, flipped{};
        for (const auto& c : w.cells)
          if (c.z == z && c.x == x && c.y == y) {
            mass += c.p;
            if (c.noisy != y) flipped += c.p;
          }
        if (mass == T{}) continue;
        if (!detail::near(T(flipped / mass), y == kPositive ? ep : em, tol)) return false;
      }
  }
  return true;
}

// Features carry no information about y beyond the noisy label:
// P(x | noisy, y, z) = P(x | noisy, z).
template <typename T>
bool is_label_sufficient(const FiniteWorld<T>& w, double tol = 1e-12) {
  for (int z = 0; z < w.groups; ++z)
    for (int k : {kPositive, kNegative}) {
      T total_k{};
      std::vector<T> px(static_cast<std::size_t>(w.points));
      for (const auto& c : w.cells)
        if (c.z == z && c.noisy == k) {
          total_k += c.p;
          px[static_cast<std::size_t>(c.x)] += c.p;
        }
      for (int y : {kPositive, kNegative}) {
        T total_ky{};
        std::vector<T> pxy(static_cast<std::size_t>(w.points));
        for (const auto& c : w.cells)
          if (c.z == z && c.noisy == k && c.y == y) {
            total_ky += c.p;
            pxy[static_cast<std::size_t>(c.x)] += c.p;
          }
        if (total_ky == T{}) continue;
        for (std::size_t x = 0; x < px.size(); ++x)
          if (!detail::near(T(pxy[x] / total_ky), T(px[x] / total_k), tol)) return false;
      }
    }
  return true;
}

// Clean joint P(x, y, z) with flips drawn independently of x.
template <typename T>
struct CleanMass {
  int x;
  int y;
  int z;
  T p;
};

template <typename T>
FiniteWorld<T> standard_world(int points, int groups, const std::vector<CleanMass<T>>& clean,
                              const std::vector<std::pair<T, T>>& eps) {
  require(eps.size() == static_cast<std::size_t>(groups), "standard world: one (eps+, eps-) pair per group");
  FiniteWorld<T> w{points, groups, {}};
  for (const auto& m : clean) {
    const auto& [ep, em] = eps[static_cast<std::size_t>(m.z)];
    const T flip = m.y == kPositive ? ep : em;
    w.cells.push_back({m.x, m.y, m.y, m.z, m.p * (T{1} - flip)});
    w.cells.push_back({m.x, m.y, -m.y, m.z, m.p * flip});
  }
  validate_world(w);
  return w;
}

// One group of a label-sufficient world: features are drawn from the
// noisy label, P(x | noisy, z).
template <typename T>
struct GroupShape {
  T weight;  // P(Z = z)
  T prior;   // P(Y = +1 | Z = z)
  T eps_plus;
  T eps_minus;
  std::vector<T> x_given_noisy_pos;
  std::vector<T> x_given_noisy_neg;
};

template <typename T>
FiniteWorld<T> label_sufficient_world(const std::vector<GroupShape<T>>& shapes) {
  require(!shapes.empty(), "label-sufficient world: no groups");
  const int points = static_cast<int>(shapes.front().x_given_noisy_pos.size());
  FiniteWorld<T> w{points, static_cast<int>(shapes.size()), {}};
  for (std::size_t z = 0; z < shapes.size(); ++z) {
    const auto& s = shapes[z];
    require(s.x_given_noisy_pos.size() == static_cast<std::size_t>(points) &&
                s.x_given_noisy_neg.size() == static_cast<std::size_t>(points),
            "label-sufficient world: ragged feature distributions");
    const T one{1};
    // P(y, noisy | z)
    const T joint[2][2] = {{s.prior * (one - s.eps_plus), s.prior * s.eps_plus},
                           {(one - s.prior) * s.eps_minus, (one - s.prior) * (one - s.eps_minus)}};
    for (int yi = 0; yi < 2; ++yi)
      for (int ki = 0; ki < 2; ++ki) {
        const auto& px = ki == 0 ? s.x_given_noisy_pos : s.x_given_noisy_neg;
        for (int x = 0; x < points; ++x)
          w.cells.push_back({x, yi == 0 ? kPositive : kNegative, ki == 0 ? kPositive : kNegative, static_cast<int>(z),
                             s.weight * joint[yi][ki] * px[static_cast<std::size_t>(x)]});
      }
  }
  validate_world(w);
  return w;
}

// Random double-valued worlds for property checks.
FiniteWorld<double> random_label_sufficient_world(std::uint64_t seed, int points, int groups, bool shared_features);
FiniteWorld<double> random_standard_world(std::uint64_t seed, int points, int groups, bool balanced);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  nlohmann::json to_json() const;
};

struct TheoryReport {
  std::vector<CheckResult> checks;
  bool passed() const;
  nlohmann::json to_json() const;
};

CheckResult verify_example1();
CheckResult verify_example2();

// Single-world checks; each raises a Hypothesis error when the world does
// not meet the theorem's preconditions.
CheckResult verify_theorem1(const FiniteWorld<Exact>& w);
CheckResult verify_theorem3(const FiniteWorld<double>& w, double tol = 1e-12);
CheckResult verify_theorem4(const FiniteWorld<double>& w, double tol = 1e-12);
CheckResult verify_lemmas(const FiniteWorld<double>& w, double tol = 1e-12);
CheckResult verify_peer_scaling(const FiniteWorld<double>& w, double tol = 1e-12);

// Two identical groups, group 1 with symmetric noise e, group 0 clean.
FiniteWorld<Exact> theorem1_world(const Exact& e);

CheckResult verify_theorem1_suite();
CheckResult verify_theorem3_suite(int worlds = 100, std::uint64_t seed = 3);
CheckResult verify_theorem4_suite(int worlds = 5, std::uint64_t seed = 4);
CheckResult verify_lemmas_suite(int worlds = 100, std::uint64_t seed = 6);
CheckResult verify_peer_scaling_suite(int worlds = 20, std::uint64_t seed = 11);

struct Theorem5Config {
  std::vector<double> taus{0.01, 0.05};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double loss_cap = 10.0;
  std::size_t per_group = 1000;
  TrainConfig train;
  Theorem5Config() { train.epochs = 30; }
};

// Trains the surrogate-loss learner with the true rates and with rates
// perturbed by at most tau, then compares their true-rate surrogate risk
// against 4 * tau * loss_cap.
CheckResult verify_theorem5(const Theorem5Config& cfg = {});

// Full suite; the training-based Theorem 5 check is optional.
TheoryReport verify_theory(bool include_training = true);

}  // namespace noisefair
