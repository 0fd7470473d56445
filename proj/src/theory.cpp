#include "noisefair/theory.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#include "noisefair/model.hpp"
#include "noisefair/rng.hpp"
#include "noisefair/synth.hpp"

namespace noisefair {

using nlohmann::json;

namespace {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string table_str(const DecisionTable& f) {
  std::string s = "(";
  for (std::size_t i = 0; i < f.size(); ++i) s += (i ? "," : "") + std::string(f[i] == kPositive ? "+1" : "-1");
  return s + ")";
}

std::string str(const Exact& v) { return v.str(); }

struct CountCell {
  int x, z, y, noisy;
  long count;
};

FiniteWorld<Exact> count_world(int points, int groups, const std::vector<CountCell>& counts) {
  long total = 0;
  for (const auto& c : counts) total += c.count;
  FiniteWorld<Exact> w{points, groups, {}};
  for (const auto& c : counts) w.cells.push_back({c.x, c.y, c.noisy, c.z, Exact(c.count, total)});
  validate_world(w);
  return w;
}

// Per-point majority of the observed labels within group z.
DecisionTable observed_majority(const FiniteWorld<Exact>& w, int z) {
  std::vector<Exact> margin(static_cast<std::size_t>(w.points));
  for (const auto& c : w.cells)
    if (c.z == z) margin[static_cast<std::size_t>(c.x)] += c.noisy == kPositive ? c.p : Exact(-c.p);
  DecisionTable f;
  for (const auto& m : margin) f.push_back(m >= 0 ? kPositive : kNegative);
  return f;
}

Exact observed_accuracy(const FiniteWorld<Exact>& w, const DecisionTable& f) {
  Exact acc = 0;
  for (const auto& c : w.cells)
    if (f[static_cast<std::size_t>(c.x)] == c.noisy) acc += c.p;
  return acc;
}

// Non-constant tables with exactly equal noisy TPR across the two groups
// that maximize pooled observed accuracy.
std::vector<DecisionTable> fair_argmax(const FiniteWorld<Exact>& w) {
  std::vector<DecisionTable> best;
  Exact best_acc = -1;
  for (const auto& f : all_tables(w.points)) {
    if (is_constant(f)) continue;
    if (world_rates(w, f, 0, LabelFlavor::Noisy).tpr != world_rates(w, f, 1, LabelFlavor::Noisy).tpr) continue;
    const Exact acc = observed_accuracy(w, f);
    if (acc > best_acc) {
      best_acc = acc;
      best.clear();
    }
    if (acc == best_acc) best.push_back(f);
  }
  return best;
}

struct Checker {
  CheckResult result;
  std::ostringstream detail;
  bool ok = true;

  explicit Checker(std::string name) { result.name = std::move(name); }
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << "FAILED: " << what << "; ";
    }
  }
  void note(const std::string& s) { detail << s << "; "; }
  CheckResult finish(const Timer& t) {
    result.passed = ok;
    result.detail = detail.str();
    if (!result.detail.empty()) result.detail.resize(result.detail.size() - 2);
    result.seconds = t.seconds();
    return result;
  }
};

std::vector<double> random_simplex(const Philox& rng, std::uint64_t& counter, int k, double floor) {
  std::vector<double> v(static_cast<std::size_t>(k));
  double total = 0.0;
  for (auto& x : v) {
    x = floor + rng.uniform(streams::kTheory, counter++);
    total += x;
  }
  for (auto& x : v) x /= total;
  return v;
}

}  // namespace

json CheckResult::to_json() const {
  return json{{"name", name}, {"passed", passed}, {"detail", detail}, {"seconds", seconds}};
}

bool TheoryReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

json TheoryReport::to_json() const {
  json rows = json::array();
  for (const auto& c : checks) rows.push_back(c.to_json());
  return json{{"passed", passed()}, {"checks", rows}};
}

std::vector<DecisionTable> all_tables(int points) {
  require(points >= 1 && points <= 5, "all_tables: enumeration supports 1..5 feature points");
  std::vector<DecisionTable> out;
  for (unsigned mask = 0; mask < (1u << points); ++mask) {
    DecisionTable f;
    for (int x = 0; x < points; ++x) f.push_back((mask >> x) & 1u ? kPositive : kNegative);
    out.push_back(std::move(f));
  }
  return out;
}

bool is_constant(const DecisionTable& f) {
  return std::all_of(f.begin(), f.end(), [&](int v) { return v == f.front(); });
}

FiniteWorld<double> random_label_sufficient_world(std::uint64_t seed, int points, int groups, bool shared_features) {
  const Philox rng(seed);
  std::uint64_t counter = 0;
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(streams::kTheory, counter++); };
  const auto weights = random_simplex(rng, counter, groups, 0.5);
  const auto shared_pos = random_simplex(rng, counter, points, 0.05);
  const auto shared_neg = random_simplex(rng, counter, points, 0.05);
  std::vector<GroupShape<double>> shapes;
  for (int z = 0; z < groups; ++z) {
    GroupShape<double> s;
    s.weight = weights[static_cast<std::size_t>(z)];
    s.prior = u(0.2, 0.8);
    s.eps_plus = u(0.0, 0.45);
    s.eps_minus = u(0.0, 0.45);
    s.x_given_noisy_pos = shared_features ? shared_pos : random_simplex(rng, counter, points, 0.05);
    s.x_given_noisy_neg = shared_features ? shared_neg : random_simplex(rng, counter, points, 0.05);
    shapes.push_back(std::move(s));
  }
  return label_sufficient_world(shapes);
}

FiniteWorld<double> random_standard_world(std::uint64_t seed, int points, int groups, bool balanced) {
  const Philox rng(seed);
  std::uint64_t counter = 0;
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(streams::kTheory, counter++); };
  const auto weights = random_simplex(rng, counter, groups, 0.5);
  std::vector<CleanMass<double>> clean;
  std::vector<std::pair<double, double>> eps;
  for (int z = 0; z < groups; ++z) {
    const double prior = balanced ? 0.5 : u(0.2, 0.8);
    const auto pos = random_simplex(rng, counter, points, 0.05);
    const auto neg = random_simplex(rng, counter, points, 0.05);
    for (int x = 0; x < points; ++x) {
      const double wz = weights[static_cast<std::size_t>(z)];
      clean.push_back({x, kPositive, z, wz * prior * pos[static_cast<std::size_t>(x)]});
      clean.push_back({x, kNegative, z, wz * (1.0 - prior) * neg[static_cast<std::size_t>(x)]});
    }
    eps.emplace_back(u(0.0, 0.45), u(0.0, 0.45));
  }
  return standard_world(points, groups, clean, eps);
}

CheckResult verify_example1() {
  const Timer t;
  Checker c("example1");
  // Points (0,0), (0,1), (1,0), (1,1); group A clean, group B with 70% of
  // its negatives observed as positives.
  const auto w = count_world(4, 2,
                             {{0, 0, -1, -1, 25}, {1, 0, -1, -1, 25}, {2, 0, 1, 1, 25}, {3, 0, 1, 1, 25},
                              {0, 1, -1, 1, 70}, {0, 1, -1, -1, 30}, {1, 1, -1, 1, 70}, {1, 1, -1, -1, 30},
                              {2, 1, 1, 1, 100}, {3, 1, 1, 1, 100}});
  const DecisionTable fa = observed_majority(w, 0), fb = observed_majority(w, 1);
  c.expect(fa == DecisionTable{-1, -1, 1, 1}, "f*_A = " + table_str(fa) + ", expected (-1,-1,+1,+1)");
  c.expect(fb == DecisionTable{1, 1, 1, 1}, "f*_B = " + table_str(fb) + ", expected (+1,+1,+1,+1)");
  const DecisionTable printed{1, -1, 1, -1};
  const auto best = fair_argmax(w);
  c.expect(std::find(best.begin(), best.end(), printed) != best.end(),
           "printed f*_fair (+1,-1,+1,-1) is not an accuracy maximizer under equal noisy TPR");
  for (const auto& f : best) {
    const auto a = world_rates(w, f, 0, LabelFlavor::Clean);
    c.expect(a.tpr == Exact(1, 2) && a.fpr == Exact(1, 2),
             "f_fair " + table_str(f) + " gives group A TPR " + str(a.tpr) + ", FPR " + str(a.fpr));
  }
  c.note(std::to_string(best.size()) + " tied maximizers, all with group A TPR = FPR = 1/2");
  return c.finish(t);
}

CheckResult verify_example2() {
  const Timer t;
  Checker c("example2");
  // Group A clean with y = (-1,-1,+1,+1); group B has y = (-1,+1,+1,+1)
  // with a quarter of its labels observed flipped.
  const auto w = count_world(4, 2,
                             {{0, 0, -1, -1, 100}, {1, 0, -1, -1, 100}, {2, 0, 1, 1, 100}, {3, 0, 1, 1, 100},
                              {0, 1, -1, 1, 75}, {0, 1, -1, -1, 225}, {1, 1, 1, 1, 75}, {1, 1, 1, -1, 25},
                              {2, 1, 1, 1, 75}, {2, 1, 1, -1, 25}, {3, 1, 1, 1, 75}, {3, 1, 1, -1, 25}});
  const DecisionTable fa = observed_majority(w, 0), fb = observed_majority(w, 1);
  c.expect(fa == DecisionTable{-1, -1, 1, 1}, "f*_A = " + table_str(fa) + ", expected (-1,-1,+1,+1)");
  c.expect(fb == DecisionTable{-1, 1, 1, 1}, "f*_B = " + table_str(fb) + ", expected (-1,+1,+1,+1)");
  const DecisionTable printed{-1, 1, -1, 1};
  const auto best = fair_argmax(w);
  c.expect(std::find(best.begin(), best.end(), printed) != best.end(),
           "printed f*_fair (-1,+1,-1,+1) is not an accuracy maximizer under equal noisy TPR");
  for (const auto& f : best) {
    const auto a = world_rates(w, f, 0, LabelFlavor::Clean);
    const auto b = world_rates(w, f, 1, LabelFlavor::Clean);
    c.expect(b.tpr == Exact(2, 3) && a.tpr == Exact(1, 2),
             "f_fair " + table_str(f) + " gives clean TPR_B " + str(b.tpr) + ", TPR_A " + str(a.tpr));
  }
  c.note(std::to_string(best.size()) + " tied maximizers, all with clean TPR_B = 2/3, TPR_A = 1/2");
  return c.finish(t);
}

FiniteWorld<Exact> theorem1_world(const Exact& e) {
  const std::vector<Exact> pos{Exact(1, 2), Exact(1, 4), Exact(1, 8), Exact(1, 8)};
  const std::vector<Exact> neg{Exact(1, 8), Exact(1, 4), Exact(1, 8), Exact(1, 2)};
  const Exact prior(2, 5), half(1, 2);
  std::vector<CleanMass<Exact>> clean;
  for (int z = 0; z < 2; ++z)
    for (int x = 0; x < 4; ++x) {
      clean.push_back({x, kPositive, z, half * prior * pos[static_cast<std::size_t>(x)]});
      clean.push_back({x, kNegative, z, half * (1 - prior) * neg[static_cast<std::size_t>(x)]});
    }
  return standard_world<Exact>(4, 2, clean, {{Exact(0), Exact(0)}, {e, e}});
}

CheckResult verify_theorem1(const FiniteWorld<Exact>& w) {
  const Timer t;
  Checker c("theorem1");
  if (w.groups != 2) fail(ErrorCode::Hypothesis, "theorem1: needs exactly two groups");
  const auto [e0p, e0m] = flip_rates(w, 0);
  const auto [e1p, e1m] = flip_rates(w, 1);
  if (e0p != 0 || e0m != 0) fail(ErrorCode::Hypothesis, "theorem1: group 0 must be clean");
  if (e1p != e1m || e1p <= 0) fail(ErrorCode::Hypothesis, "theorem1: group 1 needs symmetric noise e > 0");
  if (!has_standard_noise(w)) fail(ErrorCode::Hypothesis, "theorem1: noise must not depend on x");
  // Identical groups: equal clean P(x, y | z).
  for (int x = 0; x < w.points; ++x)
    for (int y : {kPositive, kNegative}) {
      Exact m0 = 0, m1 = 0;
      for (const auto& cell : w.cells)
        if (cell.x == x && cell.y == y) (cell.z == 0 ? m0 : m1) += cell.p;
      if (m0 / group_mass(w, 0) != m1 / group_mass(w, 1))
        fail(ErrorCode::Hypothesis, "theorem1: groups are not identically distributed");
    }
  int equal = 0, informative_candidates = 0;
  for (const auto& f : all_tables(w.points)) {
    if (world_rates(w, f, 0, LabelFlavor::Noisy).tpr != world_rates(w, f, 1, LabelFlavor::Noisy).tpr) continue;
    ++equal;
    if (!is_constant(f)) ++informative_candidates;
    for (int z = 0; z < 2; ++z) {
      const auto r = world_rates(w, f, z, LabelFlavor::Clean);
      c.expect(r.tpr == r.fpr, "table " + table_str(f) + " has equal noisy TPR but clean TPR " + str(r.tpr) +
                                   " != FPR " + str(r.fpr) + " in group " + std::to_string(z));
    }
  }
  c.note("e = " + str(e1p) + ": " + std::to_string(equal) + " equal-noisy-TPR tables (" +
         std::to_string(informative_candidates) + " non-constant), all uninformative");
  return c.finish(t);
}

CheckResult verify_theorem1_suite() {
  const Timer t;
  Checker c("theorem1");
  for (const Exact& e : {Exact(1, 10), Exact(3, 10), Exact(9, 20)}) {
    const auto r = verify_theorem1(theorem1_world(e));
    c.expect(r.passed, r.detail);
    if (r.passed) c.note(r.detail);
  }
  return c.finish(t);
}

CheckResult verify_theorem3(const FiniteWorld<double>& w, double tol) {
  const Timer t;
  Checker c("theorem3");
  if (!is_label_sufficient(w, 1e-12))
    fail(ErrorCode::Hypothesis, "theorem3: features must depend on y only through the noisy label");
  int checked = 0;
  double worst = 0.0;
  for (const auto& f : all_tables(w.points)) {
    std::vector<WorldRates<double>> noisy, clean;
    for (int z = 0; z < w.groups; ++z) {
      noisy.push_back(world_rates(w, f, z, LabelFlavor::Noisy));
      clean.push_back(world_rates(w, f, z, LabelFlavor::Clean));
    }
    bool equal_odds = true;
    for (int z = 1; z < w.groups; ++z)
      equal_odds = equal_odds && std::abs(noisy[z].tpr - noisy[0].tpr) <= 1e-12 &&
                   std::abs(noisy[z].fpr - noisy[0].fpr) <= 1e-12;
    if (!equal_odds) continue;
    for (int a = 0; a < w.groups; ++a)
      for (int b = 0; b < w.groups; ++b) {
        if (a == b) continue;
        const auto [ap, am] = flip_rates(w, a);
        const auto [bp, bm] = flip_rates(w, b);
        const auto [tgap, fgap] = theorem3_gap({noisy[a].tpr, noisy[a].fpr}, {ap, am}, {bp, bm});
        const double dt = std::abs(std::abs(clean[a].tpr - clean[b].tpr) - tgap);
        const double df = std::abs(std::abs(clean[a].fpr - clean[b].fpr) - fgap);
        worst = std::max({worst, dt, df});
        ++checked;
      }
  }
  c.expect(checked > 0, "no table satisfies equal noisy odds");
  c.expect(worst <= tol, "closed-form gap differs from enumeration by " + std::to_string(worst));
  c.note(std::to_string(checked) + " group pairs checked, max error " + std::to_string(worst));
  return c.finish(t);
}

CheckResult verify_theorem3_suite(int worlds, std::uint64_t seed) {
  const Timer t;
  Checker c("theorem3");
  for (int k = 0; k < worlds; ++k) {
    const auto w = random_label_sufficient_world(derive_seed(seed, static_cast<std::uint64_t>(k)), 2 + k % 4,
                                                 2 + k % 2, true);
    const auto r = verify_theorem3(w);
    c.expect(r.passed, "world " + std::to_string(k) + ": " + r.detail);
  }
  c.note(std::to_string(worlds) + " random worlds with equal noisy odds");
  return c.finish(t);
}

namespace {

// Expected 0-1 loss against the clean or noisy label within group z.
double expected_error(const FiniteWorld<double>& w, const DecisionTable& f, int z, LabelFlavor flavor) {
  double e = 0.0;
  for (const auto& c : w.cells)
    if (c.z == z && f[static_cast<std::size_t>(c.x)] != (flavor == LabelFlavor::Clean ? c.y : c.noisy)) e += c.p;
  return e / group_mass(w, z);
}

// E over an independent (x, label) pair from group z of the 0-1 loss.
double expected_peer_term(const FiniteWorld<double>& w, const DecisionTable& f, int z, LabelFlavor flavor) {
  const double mass = group_mass(w, z);
  double pred_pos = 0.0, label_pos = 0.0;
  for (const auto& c : w.cells) {
    if (c.z != z) continue;
    if (f[static_cast<std::size_t>(c.x)] == kPositive) pred_pos += c.p;
    if ((flavor == LabelFlavor::Clean ? c.y : c.noisy) == kPositive) label_pos += c.p;
  }
  pred_pos /= mass;
  label_pos /= mass;
  return pred_pos * (1.0 - label_pos) + (1.0 - pred_pos) * label_pos;
}

}  // namespace

CheckResult verify_theorem4(const FiniteWorld<double>& w, double tol) {
  const Timer t;
  Checker c("theorem4");
  if (!has_standard_noise(w)) fail(ErrorCode::Hypothesis, "theorem4: noise must not depend on x");
  for (int z = 0; z < w.groups; ++z)
    if (std::abs(clean_prior(w, z) - 0.5) > 1e-12)
      fail(ErrorCode::Hypothesis, "theorem4: group " + std::to_string(z) + " is not class balanced");
  double worst = 0.0;
  for (const auto& f : all_tables(w.points)) {
    double noisy_gp = 0.0, clean_loss = 0.0;
    for (int z = 0; z < w.groups; ++z) {
      const auto [ep, em] = flip_rates(w, z);
      const double pz = group_mass(w, z);
      noisy_gp += pz / (1.0 - ep - em) *
                  (expected_error(w, f, z, LabelFlavor::Noisy) - expected_peer_term(w, f, z, LabelFlavor::Noisy));
      clean_loss += pz * expected_error(w, f, z, LabelFlavor::Clean);
    }
    worst = std::max(worst, std::abs(noisy_gp - clean_loss + 0.5));
  }
  c.expect(worst <= tol, "E_noisy[l_gp] - E_clean[l] deviates from -1/2 by " + std::to_string(worst));
  c.note(std::to_string(1 << w.points) + " tables, max deviation " + std::to_string(worst));
  return c.finish(t);
}

CheckResult verify_theorem4_suite(int worlds, std::uint64_t seed) {
  const Timer t;
  Checker c("theorem4");
  for (int k = 0; k < worlds; ++k) {
    const auto w = random_standard_world(derive_seed(seed, static_cast<std::uint64_t>(k)), 3 + k % 3, 2 + k % 2, true);
    const auto r = verify_theorem4(w);
    c.expect(r.passed, "world " + std::to_string(k) + ": " + r.detail);
  }
  c.note(std::to_string(worlds) + " balanced worlds");
  return c.finish(t);
}

CheckResult verify_lemmas(const FiniteWorld<double>& w, double tol) {
  const Timer t;
  Checker c("lemma1_lemma2");
  if (!is_label_sufficient(w, 1e-12))
    fail(ErrorCode::Hypothesis, "lemmas: features must depend on y only through the noisy label");
  NoiseEstimate est;
  for (int z = 0; z < w.groups; ++z) {
    const auto [ep, em] = flip_rates(w, z);
    est.groups.push_back({ep, em, clean_prior(w, z), false});
    est.group_names.push_back(std::to_string(z));
  }
  est.validate();
  double worst = 0.0;
  for (const auto& f : all_tables(w.points)) {
    if (is_constant(f)) continue;
    GroupConfusion gc;
    gc.flavor = LabelFlavor::Noisy;
    std::vector<double> positive_rate;
    std::vector<WorldRates<double>> clean;
    for (int z = 0; z < w.groups; ++z) {
      const auto r = world_rates(w, f, z, LabelFlavor::Noisy);
      gc.groups.push_back({r.tpr, r.fpr, r.positive_rate, 1, 1});
      positive_rate.push_back(r.positive_rate);
      clean.push_back(world_rates(w, f, z, LabelFlavor::Clean));
    }
    const auto sl = surrogate_statistic_sl(gc, est, Metric::EqualOdds);
    const auto peer = surrogate_statistic_peer(positive_rate, gc, est, Metric::EqualOdds);
    for (int z = 0; z < w.groups; ++z) {
      const auto zi = static_cast<std::size_t>(z);
      const auto corrected = lemma1_correct({gc.groups[zi].tpr, gc.groups[zi].fpr}, {est[zi].eps_plus, est[zi].eps_minus});
      worst = std::max({worst, std::abs(corrected.tpr - clean[zi].tpr), std::abs(corrected.fpr - clean[zi].fpr),
                        std::abs(sl[0][zi] - clean[zi].tpr), std::abs(sl[1][zi] - clean[zi].fpr),
                        std::abs(peer[0][zi] - clean[zi].tpr), std::abs(peer[1][zi] - clean[zi].fpr)});
    }
  }
  c.expect(worst <= tol, "correction maps differ from enumeration by " + std::to_string(worst));
  c.note("max error " + std::to_string(worst));
  return c.finish(t);
}

CheckResult verify_lemmas_suite(int worlds, std::uint64_t seed) {
  const Timer t;
  Checker c("lemma1_lemma2");
  for (int k = 0; k < worlds; ++k) {
    const auto w = random_label_sufficient_world(derive_seed(seed, static_cast<std::uint64_t>(k)), 2 + k % 4,
                                                 2 + k % 3, false);
    const auto r = verify_lemmas(w);
    c.expect(r.passed, "world " + std::to_string(k) + ": " + r.detail);
  }
  c.note(std::to_string(worlds) + " random worlds");
  return c.finish(t);
}

CheckResult verify_peer_scaling(const FiniteWorld<double>& w, double tol) {
  const Timer t;
  Checker c("peer_scaling");
  if (!has_standard_noise(w)) fail(ErrorCode::Hypothesis, "peer scaling: noise must not depend on x");
  double worst = 0.0;
  for (const auto& f : all_tables(w.points))
    for (int z = 0; z < w.groups; ++z) {
      const auto [ep, em] = flip_rates(w, z);
      const double noisy = expected_error(w, f, z, LabelFlavor::Noisy) - expected_peer_term(w, f, z, LabelFlavor::Noisy);
      const double clean = expected_error(w, f, z, LabelFlavor::Clean) - expected_peer_term(w, f, z, LabelFlavor::Clean);
      worst = std::max(worst, std::abs(noisy - (1.0 - ep - em) * clean));
    }
  c.expect(worst <= tol, "E_noisy[l_peer] differs from Delta * E_clean[l_peer] by " + std::to_string(worst));
  c.note("max error " + std::to_string(worst));
  return c.finish(t);
}

CheckResult verify_peer_scaling_suite(int worlds, std::uint64_t seed) {
  const Timer t;
  Checker c("peer_scaling");
  for (int k = 0; k < worlds; ++k) {
    const auto w = random_standard_world(derive_seed(seed, static_cast<std::uint64_t>(k)), 2 + k % 4, 2 + k % 2, false);
    const auto r = verify_peer_scaling(w);
    c.expect(r.passed, "world " + std::to_string(k) + ": " + r.detail);
  }
  c.note(std::to_string(worlds) + " random worlds");
  return c.finish(t);
}

namespace {

// Largest distance between the surrogate coefficients and rates of `a` and `b`.
double coefficient_distance(const GroupNoise& a, const GroupNoise& b) {
  auto coefs = [](const GroupNoise& g) {
    const double d = g.delta();
    return std::array<double, 6>{g.eps_plus, g.eps_minus, g.eps_plus / d, g.eps_minus / d, (1.0 - g.eps_minus) / d,
                                 (1.0 - g.eps_plus) / d};
  };
  const auto ca = coefs(a), cb = coefs(b);
  double m = 0.0;
  for (std::size_t k = 0; k < ca.size(); ++k) m = std::max(m, std::abs(ca[k] - cb[k]));
  return m;
}

}  // namespace

CheckResult verify_theorem5(const Theorem5Config& cfg) {
  const Timer t;
  Checker c("theorem5");
  const NoiseSpec truth({{0.2, 0.1}, {0.3, 0.15}});
  const LossKind base = LossKind::clipped_logistic(cfg.loss_cap);
  double worst_ratio = -INFINITY;
  for (std::uint64_t seed : cfg.seeds) {
    const Dataset clean = synth_generate(SynthSpec::adultlike(cfg.per_group, seed)).standardized();
    const Dataset noisy = inject_noise(clean, truth, seed);
    const NoiseEstimate est_true = NoiseEstimate::from_spec(truth, noisy);
    TrainConfig train = cfg.train;
    train.seed = seed;
    const LossSpec true_spec{Objective::Surrogate, base, est_true, 1.0};
    const auto f_true = RandomizedClassifier::single(fit_unconstrained(noisy, true_spec, train));
    const double risk_true = surrogate_risk(f_true, noisy, est_true, base);
    const Philox rng(seed);
    for (std::size_t k = 0; k < cfg.taus.size(); ++k) {
      const double tau = cfg.taus[k];
      NoiseEstimate perturbed = est_true;
      for (std::size_t z = 0; z < perturbed.num_groups(); ++z) {
        const auto b = rng.block(streams::kTheory, k * 64 + z);
        const double sp = b[0] & 1u ? 1.0 : -1.0, sm = b[1] & 1u ? 1.0 : -1.0;
        const GroupNoise g{truth[z].eps_plus, truth[z].eps_minus};
        double step = tau;
        GroupNoise moved{g.eps_plus + sp * step, g.eps_minus + sm * step};
        while (coefficient_distance(g, moved) > tau) {
          step *= 0.5;
          moved = {g.eps_plus + sp * step, g.eps_minus + sm * step};
        }
        perturbed.groups[z].eps_plus = moved.eps_plus;
        perturbed.groups[z].eps_minus = moved.eps_minus;
      }
      const LossSpec spec{Objective::Surrogate, base, perturbed, 1.0};
      const auto f_hat = RandomizedClassifier::single(fit_unconstrained(noisy, spec, train));
      const double excess = surrogate_risk(f_hat, noisy, est_true, base) - risk_true;
      const double bound = 4.0 * tau * cfg.loss_cap;
      worst_ratio = std::max(worst_ratio, excess / bound);
      c.expect(excess <= bound, "seed " + std::to_string(seed) + ", tau " + std::to_string(tau) + ": excess " +
                                    std::to_string(excess) + " > bound " + std::to_string(bound));
    }
  }
  c.note("max excess / (4 tau lbar) = " + std::to_string(worst_ratio));
  return c.finish(t);
}

TheoryReport verify_theory(bool include_training) {
  TheoryReport report;
  auto run = [&](const std::string& name, auto&& fn) {
    try {
      report.checks.push_back(fn());
    } catch (const std::exception& e) {
      report.checks.push_back({name, false, e.what(), 0.0});
    }
  };
  run("example1", [] { return verify_example1(); });
  run("example2", [] { return verify_example2(); });
  run("theorem1", [] { return verify_theorem1_suite(); });
  run("theorem3", [] { return verify_theorem3_suite(); });
  run("theorem4", [] { return verify_theorem4_suite(); });
  run("lemma1_lemma2", [] { return verify_lemmas_suite(); });
  run("peer_scaling", [] { return verify_peer_scaling_suite(); });
  if (include_training) run("theorem5", [] { return verify_theorem5(); });
  return report;
}

}  // namespace noisefair
