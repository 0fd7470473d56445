#include <doctest.h>

#include <cmath>
#include <vector>

#include "../support/fixtures.hpp"
#include "noisefair/dataset.hpp"
#include "noisefair/error.hpp"
#include "noisefair/noise_estimation.hpp"

using namespace noisefair;

namespace {

Dataset one_group(std::vector<int> labels) {
  std::vector<double> f(labels.size(), 1.0);
  const std::size_t n = labels.size();
  return Dataset(std::move(f), 1, std::move(labels), std::vector<int>(n, 0), {"g"});
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("self-confidence threshold is the class-wise mean") {
  const Dataset ds = one_group({1, 1, 1, -1});
  ProbabilityTable pt{{0.7, 0.7, 0.7, 0.2}, {0, 0, 0, 0}};
  auto th = self_confidence_thresholds(pt, ds);
  CHECK(th.at(kPositive, 0) == doctest::Approx(0.7));
  CHECK(th.at(kNegative, 0) == doctest::Approx(0.8));

  pt.p_plus = {0.6, 0.8, 0.1, 0.3};
  const Dataset two = one_group({1, 1, -1, -1});
  th = self_confidence_thresholds(pt, two);
  CHECK(th.at(kPositive, 0) == doctest::Approx(0.7));
}

TEST_CASE("a group without noisy negatives has no negative threshold") {
  const Dataset ds = one_group({1, 1, 1});
  const ProbabilityTable pt{{0.7, 0.6, 0.9}, {0, 0, 0}};
  CHECK(code_of([&] { self_confidence_thresholds(pt, ds); }) == ErrorCode::Estimation);
}

TEST_CASE("confident probabilities give a diagonal joint") {
  const Dataset ds = one_group({1, 1, -1, -1, -1});
  const ProbabilityTable pt{{1.0, 1.0, 0.0, 0.0, 0.0}, {0, 0, 0, 0, 0}};
  const auto cj = confident_joint(pt, ds, self_confidence_thresholds(pt, ds));
  CHECK(cj.joint[0][0][0] == doctest::Approx(0.4));
  CHECK(cj.joint[0][1][1] == doctest::Approx(0.6));
  CHECK(cj.joint[0][0][1] == 0.0);
  CHECK(cj.joint[0][1][0] == 0.0);
  const auto est = estimate_noise(cj, ds.group_names());
  CHECK(est[0].eps_plus == 0.0);
  CHECK(est[0].eps_minus == 0.0);
  CHECK(est[0].prior_plus == doctest::Approx(0.4));
}

TEST_CASE("confident joint on a hand-worked fixture") {
  // Thresholds are 0.65 for both classes. Rows 3 and 7 clear neither, row 2
  // (noisy +1) is confidently -1, row 6 (noisy -1) is confidently +1.
  // Counts [[2, 1], [1, 2]], calibrated by noisy class size 4 and normalized:
  // [[1/3, 1/6], [1/6, 1/3]], hence eps+ = eps- = 1/3.
  const Dataset ds = one_group({1, 1, 1, 1, -1, -1, -1, -1});
  const ProbabilityTable pt{{0.9, 0.8, 0.3, 0.6, 0.2, 0.1, 0.7, 0.4}, std::vector<int>(8, 0)};
  const auto th = self_confidence_thresholds(pt, ds);
  CHECK(th.at(kPositive, 0) == doctest::Approx(0.65));
  CHECK(th.at(kNegative, 0) == doctest::Approx(0.65));
  const auto cj = confident_joint(pt, ds, th);
  CHECK(cj.counts[0][0][0] == 2.0);
  CHECK(cj.counts[0][0][1] == 1.0);
  CHECK(cj.counts[0][1][0] == 1.0);
  CHECK(cj.counts[0][1][1] == 2.0);
  CHECK(cj.joint[0][0][0] == doctest::Approx(1.0 / 3));
  CHECK(cj.joint[0][0][1] == doctest::Approx(1.0 / 6));
  const auto est = estimate_noise(cj, ds.group_names());
  CHECK(est[0].eps_plus == doctest::Approx(1.0 / 3));
  CHECK(est[0].eps_minus == doctest::Approx(1.0 / 3));
  CHECK(est[0].prior_plus == doctest::Approx(0.5));
}

TEST_CASE("double-qualifying ties go to the noisy label") {
  const Dataset ds = one_group({1, -1, 1, -1});
  const ProbabilityTable pt{std::vector<double>(4, 0.5), std::vector<int>(4, 0)};
  const auto cj = confident_joint(pt, ds, self_confidence_thresholds(pt, ds));
  CHECK(cj.counts[0][0][0] == 2.0);
  CHECK(cj.counts[0][1][1] == 2.0);
  CHECK(cj.counts[0][0][1] == 0.0);
  CHECK(cj.counts[0][1][0] == 0.0);
}

TEST_CASE("rates from a given joint") {
  ConfidentJoint cj;
  cj.joint = {{{{0.35, 0.15}, {0.05, 0.45}}}};
  const auto est = estimate_noise(cj, {"g"});
  CHECK(est[0].eps_plus == doctest::Approx(0.125));
  CHECK(est[0].eps_minus == doctest::Approx(0.25));
  CHECK(est[0].prior_plus == doctest::Approx(0.4));
  CHECK_FALSE(est[0].clipped);
}

TEST_CASE("estimated rates are clipped below one half") {
  ConfidentJoint cj;
  cj.joint = {{{{0.1, 0.3}, {0.4, 0.2}}}};  // raw eps+ 0.8, eps- 0.6
  const auto est = estimate_noise(cj, {"g"});
  CHECK(est[0].eps_plus <= kEpsClipCeiling);
  CHECK(est[0].eps_minus <= kEpsClipCeiling);
  CHECK(est[0].delta() >= kDeltaFloor - 1e-12);
  CHECK(est[0].clipped);
}

TEST_CASE("a joint without confident positives cannot be inverted") {
  ConfidentJoint cj;
  cj.joint = {{{{0.0, 0.5}, {0.0, 0.5}}}};
  CHECK(code_of([&] { estimate_noise(cj, {"g"}); }) == ErrorCode::Estimation);
}

TEST_CASE("pretraining needs at least two folds") {
  const Dataset ds = fixtures::blobs(20, 1, 2.0, 1);
  CHECK(code_of([&] { pretrain_probabilities(ds, 1, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("pretrained probabilities are confident on separated clusters") {
  const Dataset ds = fixtures::blobs(2000, 2, 8.0, 3).standardized();
  const auto pt = pretrain_probabilities(ds, 5, 1);
  std::size_t correct = 0;
  double mean = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    correct += pt.p(i, ds.label(i)) > 0.5;
    mean += pt.p(i, ds.label(i));
  }
  CHECK(correct == ds.size());
  CHECK(mean / static_cast<double>(ds.size()) >= 0.95);
}

TEST_CASE("pretrained probabilities follow the base rate when labels carry no signal") {
  const Dataset base = fixtures::blobs(2500, 1, 0.0, 4, 2, 0.3).standardized();
  const auto pt = pretrain_probabilities(base, 5, 2);
  double mean = 0.0, spread = 0.0;
  for (double p : pt.p_plus) mean += p;
  mean /= static_cast<double>(pt.p_plus.size());
  // Mean absolute deviation; single rows move with the fitted slopes.
  for (double p : pt.p_plus) spread += std::abs(p - 0.3);
  spread /= static_cast<double>(pt.p_plus.size());
  CHECK(mean == doctest::Approx(0.3).epsilon(0.1));
  CHECK(spread < 0.02);
}

TEST_CASE("estimator recovers injected rates on separable data") {
  const Dataset clean = fixtures::blobs(2500, 2, 5.0, 10).standardized();
  const Dataset noisy = inject_noise(clean, NoiseSpec({{0.3, 0.1}, {0.3, 0.1}}), 3);
  const auto truth = empirical_flip_rates(clean, noisy);
  const auto est = estimate_noise_from_data(noisy, {5, 7});
  for (std::size_t z = 0; z < 2; ++z) {
    CHECK(std::abs(est[z].eps_plus - truth[z].eps_plus()) <= 0.1);
    CHECK(std::abs(est[z].eps_minus - truth[z].eps_minus()) <= 0.1);
  }
}

TEST_CASE("known rates recover priors from noisy marginals") {
  const Dataset clean = fixtures::blobs(5000, 1, 1.0, 2, 2, 0.3);
  const NoiseSpec spec({{0.2, 0.1}});
  const auto est = NoiseEstimate::from_spec(spec, inject_noise(clean, spec, 1));
  CHECK(est[0].prior_plus == doctest::Approx(0.3).epsilon(0.05));
}

TEST_CASE("estimate json round trip") {
  NoiseEstimate e;
  e.groups = {{0.15, 0.45, 0.3, false}, {0.49, 0.35, 0.4, true}};
  e.group_names = {"female", "male"};
  const auto back = NoiseEstimate::from_json(e.to_json());
  REQUIRE(back.num_groups() == 2);
  CHECK(back[1].eps_plus == 0.49);
  CHECK(back[1].clipped);
  CHECK(back.group_names[0] == "female");
  CHECK(code_of([] { NoiseEstimate::from_json({{"g", {{"eps_plus", 0.6}, {"eps_minus", 0.5}}}}); }) ==
        ErrorCode::InvalidArgument);
}
