#include <doctest.h>

#include <cmath>
#include <vector>

#include "noisefair/dataset.hpp"
#include "noisefair/error.hpp"
#include "noisefair/fairness.hpp"
#include "noisefair/rng.hpp"
#include "noisefair/theory.hpp"

using namespace noisefair;

namespace {

GroupConfusion noisy_confusion(std::vector<GroupRates> rates) {
  GroupConfusion gc;
  gc.flavor = LabelFlavor::Noisy;
  gc.groups = std::move(rates);
  return gc;
}

NoiseEstimate estimate_of(std::vector<GroupEstimate> g) {
  NoiseEstimate e;
  e.groups = std::move(g);
  for (std::size_t z = 0; z < e.groups.size(); ++z) e.group_names.push_back("g" + std::to_string(z));
  return e;
}

// Four rows per group covering both labels.
Dataset small_two_group() {
  std::vector<double> f;
  for (int i = 0; i < 8; ++i) f.insert(f.end(), {1.0, static_cast<double>(i)});
  return Dataset(f, 2, {1, 1, -1, -1, 1, -1, -1, -1}, {0, 0, 0, 0, 1, 1, 1, 1}, {"a", "b"});
}

}  // namespace

TEST_CASE("confusion of a perfect and of a constant classifier") {
  const Dataset ds = small_two_group();
  std::vector<double> perfect;
  for (int y : ds.labels()) perfect.push_back(y == kPositive ? 1.0 : 0.0);
  const auto gc = confusion(perfect, ds, LabelFlavor::Clean);
  for (const auto& g : gc.groups) {
    CHECK(g.tpr == 1.0);
    CHECK(g.fpr == 0.0);
  }
  const auto all_pos = confusion(std::vector<double>(ds.size(), 1.0), ds, LabelFlavor::Clean);
  for (const auto& g : all_pos.groups) {
    CHECK(g.tpr == 1.0);
    CHECK(g.fpr == 1.0);
    CHECK(g.positive_rate == 1.0);
  }
}

TEST_CASE("confusion names the group lacking a class") {
  const Dataset ds({1, 0, 1, 1, 1, 2, 1, 3}, 2, {1, -1, 1, 1}, {0, 0, 1, 1}, {"a", "b"});
  try {
    confusion(std::vector<double>(4, 1.0), ds, LabelFlavor::Noisy);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("'b'") != std::string::npos);
    CHECK(std::string(e.what()).find("FPR") != std::string::npos);
  }
}

TEST_CASE("surrogate statistic table") {
  const auto est = estimate_of({{0.0, 0.0, 0.5, false}, {0.3, 0.1, 0.5, false}});
  const auto gc = noisy_confusion({{0.8, 0.2, 0.5, 1, 1}, {0.8, 0.2, 0.5, 1, 1}});
  const auto s = surrogate_statistic_sl(gc, est, Metric::EqualOdds);
  CHECK(s[0][0] == doctest::Approx(0.8));
  CHECK(s[1][0] == doctest::Approx(0.2));
  CHECK(s[0][1] == doctest::Approx(0.62));
  CHECK(s[1][1] == doctest::Approx(0.26));
}

TEST_CASE("peer statistic table") {
  const auto est = estimate_of({{0.0, 0.0, 0.5, false}, {0.2, 0.2, 0.5, false}});
  const auto gc = noisy_confusion({{0.8, 0.2, 0.5, 1, 1}, {0.4, 0.4, 0.3, 1, 1}});
  const std::vector<double> pr{0.5, 0.3};
  const auto s = surrogate_statistic_peer(pr, gc, est, Metric::EqualOdds);
  CHECK(s[0][0] == doctest::Approx(0.8));
  CHECK(s[0][1] == doctest::Approx(0.3));
  CHECK(s[1][1] == doctest::Approx(0.3));
}

TEST_CASE("lemma maps at degenerate inputs") {
  const ClassRates r{0.7, 0.35};
  const auto id = lemma1_correct(r, {0.0, 0.0});
  CHECK(id.tpr == r.tpr);
  CHECK(id.fpr == r.fpr);
  for (double e : {0.05, 0.3, 0.45}) {
    const auto u = lemma1_correct({0.4, 0.4}, {e, 0.5 - e / 2});
    CHECK(u.tpr == doctest::Approx(0.4));
    CHECK(u.fpr == doctest::Approx(0.4));
  }
  const auto back = lemma1_uncorrect(lemma1_correct(r, {0.2, 0.3}), {0.2, 0.3});
  CHECK(back.tpr == doctest::Approx(r.tpr));
  CHECK(back.fpr == doctest::Approx(r.fpr));
}

TEST_CASE("violation is the largest row range") {
  CHECK(violation({{0.3, 0.3}}) == 0.0);
  CHECK(violation({{0.62, 0.50, 0.55}}) == doctest::Approx(0.12));
  CHECK(violation({{0.50, 0.54}, {0.10, 0.19}}) == doctest::Approx(0.09));
  CHECK_THROWS_AS(violation({{0.5}}), Error);
}

TEST_CASE("theorem 3 gap") {
  const auto [tpr_gap, fpr_gap] = theorem3_gap({0.8, 0.2}, {0.3, 0.2}, {0.1, 0.2});
  CHECK(tpr_gap == doctest::Approx(0.12));
  CHECK(fpr_gap == 0.0);
  const auto [a, b] = theorem3_gap({0.4, 0.4}, {0.3, 0.2}, {0.1, 0.0});
  CHECK(a == 0.0);
  CHECK(b == 0.0);
}

TEST_CASE("property: class-conditional correction matches enumeration") {
  // Flips independent of x: the world is not label sufficient, so only the
  // prior-aware inverse recovers the clean rates.
  for (std::uint64_t k = 0; k < 100; ++k) {
    const auto w = random_standard_world(derive_seed(31, k), 2 + static_cast<int>(k % 4), 2, false);
    for (const auto& f : all_tables(w.points)) {
      if (is_constant(f)) continue;
      for (int z = 0; z < w.groups; ++z) {
        const auto [ep, em] = flip_rates(w, z);
        const GroupEstimate e{ep, em, clean_prior(w, z), false};
        const auto noisy = world_rates(w, f, z, LabelFlavor::Noisy);
        const auto clean = world_rates(w, f, z, LabelFlavor::Clean);
        const auto got = class_conditional_correct({noisy.tpr, noisy.fpr}, e);
        REQUIRE(std::abs(got.tpr - clean.tpr) <= 1e-12);
        REQUIRE(std::abs(got.fpr - clean.fpr) <= 1e-12);
        const auto back = class_conditional_uncorrect({clean.tpr, clean.fpr}, e);
        REQUIRE(std::abs(back.tpr - noisy.tpr) <= 1e-12);
        REQUIRE(std::abs(back.fpr - noisy.fpr) <= 1e-12);
      }
    }
  }
}

TEST_CASE("property: statistic coefficients reproduce the constraint statistics") {
  const Philox rng(5);
  std::uint64_t c = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GroupEstimate> g;
    std::vector<GroupRates> rates;
    for (int z = 0; z < 3; ++z) {
      g.push_back({0.45 * rng.uniform(1, c++), 0.45 * rng.uniform(1, c++), 0.1 + 0.8 * rng.uniform(1, c++), false});
      rates.push_back({rng.uniform(1, c++), rng.uniform(1, c++), rng.uniform(1, c++), 1, 1});
    }
    const auto gc = noisy_confusion(rates);
    for (Correction corr : {Correction::None, Correction::Surrogate, Correction::Peer})
      for (NoiseModel model : {NoiseModel::LabelSufficient, NoiseModel::ClassConditional}) {
        ConstraintSpec spec;
        spec.correction = corr;
        spec.noise_model = model;
        spec.estimate = estimate_of(g);
        const auto stats = constraint_statistics(gc, spec);
        const auto rows = metric_rows(spec.metric);
        for (std::size_t r = 0; r < rows.size(); ++r)
          for (std::size_t z = 0; z < 3; ++z) {
            const auto k = statistic_coefficients(spec, rows[r], z);
            const double lin = k.tpr * rates[z].tpr + k.fpr * rates[z].fpr + k.positive_rate * rates[z].positive_rate +
                               k.constant;
            REQUIRE(std::abs(lin - stats[r][z]) <= 1e-12);
          }
      }
  }
}

TEST_CASE("metric and correction names round trip") {
  for (Metric m : {Metric::TPR, Metric::FPR, Metric::EqualOdds}) CHECK(parse_metric(to_string(m)) == m);
  for (Correction c : {Correction::None, Correction::Surrogate, Correction::Peer})
    CHECK(parse_correction(to_string(c)) == c);
  for (NoiseModel m : {NoiseModel::LabelSufficient, NoiseModel::ClassConditional})
    CHECK(parse_noise_model(to_string(m)) == m);
  CHECK_THROWS_AS(parse_metric("parity"), Error);
}
