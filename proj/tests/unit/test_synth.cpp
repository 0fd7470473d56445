#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "noisefair/dataset.hpp"
#include "noisefair/error.hpp"
#include "noisefair/model.hpp"
#include "noisefair/synth.hpp"
#include "noisefair/trainer.hpp"

using namespace noisefair;

namespace {

SynthSpec two_groups(double shift_a, double shift_b, std::size_t count) {
  SynthSpec s;
  s.group_names = {"a", "b"};
  s.seed = 5;
  const std::vector<std::vector<double>> cov = {{1.0, 0.3}, {0.3, 1.0}};
  for (int z = 0; z < 2; ++z) {
    const double shift = z == 0 ? shift_a : shift_b;
    s.clusters.push_back({z, kPositive, count, {shift, shift}, cov});
    s.clusters.push_back({z, kNegative, count, {-shift, -shift}, cov});
  }
  return s;
}

TrainConfig train_config() {
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.outer_rounds = 20;
  cfg.seed = 2;
  return cfg;
}

}  // namespace

TEST_CASE("synthetic data is deterministic given the seed") {
  const auto spec = two_groups(1.0, 1.0, 50);
  const Dataset a = synth_generate(spec);
  const Dataset b = synth_generate(spec);
  CHECK(a.features() == b.features());
  auto other = spec;
  other.seed = 6;
  CHECK(synth_generate(other).features() != a.features());
}

TEST_CASE("far-separated clusters are fit almost perfectly") {
  const Dataset ds = synth_generate(two_groups(5.0, 5.0, 500)).standardized();
  CHECK(accuracy(RandomizedClassifier::single(fit_unconstrained(ds, {}, train_config())), ds) >= 0.99);
}

TEST_CASE("identical groups make fair training nearly free") {
  const Dataset ds = synth_generate(two_groups(0.8, 0.8, 5000)).standardized();
  const TrainConfig cfg = train_config();
  const double free = accuracy(RandomizedClassifier::single(fit_unconstrained(ds, {}, cfg)), ds);
  const auto fit = fit_constrained(ds, {}, ConstraintSpec{}, cfg);
  CHECK(free - accuracy(fit.classifier, ds) < 0.01);
}

TEST_CASE("adultlike preset reaches about 0.85 clean accuracy") {
  const Dataset raw = synth_generate(SynthSpec::adultlike(10000, 3));
  const Split sp = split(raw, {0.2, 0.0, 3});
  const Dataset train = sp.train.standardized();
  const Dataset test = sp.test.standardized_with(train.standardizer());
  const auto m = fit_unconstrained(train, {}, train_config());
  const double acc = accuracy(RandomizedClassifier::single(m), test);
  CHECK(acc >= 0.82);
  CHECK(acc <= 0.88);
  CHECK(raw.group_names() == std::vector<std::string>{"female", "male"});
  CHECK(raw.cols() == 7);
}

TEST_CASE("synth spec errors") {
  auto empty = two_groups(1.0, 1.0, 10);
  empty.clusters[1].count = 0;
  CHECK_THROWS_AS(synth_generate(empty), Error);
  auto singular = two_groups(1.0, 1.0, 10);
  singular.clusters[0].cov = {{1.0, 1.0}, {1.0, 1.0}};
  CHECK_THROWS_AS(synth_generate(singular), Error);
  CHECK_THROWS_AS(SynthSpec::from_json({{"preset", "compas"}}), Error);
}
