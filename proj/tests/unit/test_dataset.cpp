#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "../support/fixtures.hpp"
#include "noisefair/dataset.hpp"
#include "noisefair/error.hpp"
#include "noisefair/rng.hpp"

using namespace noisefair;

namespace {

Schema adult_schema() {
  return Schema::from_json({{"label_column", "income"},
                            {"positive_symbol", ">50K"},
                            {"group_column", "sex"},
                            {"feature_columns", {"age", "hours"}}});
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

TEST_CASE("philox matches the Random123 known-answer vector") {
  const Philox rng(0);
  const auto b = rng.block(0, 0);
  CHECK(b[0] == 0x6627e8d5u);
  CHECK(b[1] == 0xe169c58du);
  CHECK(b[2] == 0xbc57ac4cu);
  CHECK(b[3] == 0x9b00dbd8u);
}

TEST_CASE("philox draws are pure functions of (stream, counter)") {
  const Philox a(42), b(42), c(43);
  CHECK(a.uniform(1, 7) == b.uniform(1, 7));
  CHECK(a.uniform(1, 7) != a.uniform(2, 7));
  CHECK(a.uniform(1, 7) != c.uniform(1, 7));
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const double u = a.uniform(3, i);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(a.below(7, 3, i) < 7);
  }
}

TEST_CASE("csv labels are mapped by the declared positive symbol") {
  const std::string csv =
      "age,hours,sex,income\n"
      "30,40,F,>50K\n"
      "41,20,M,<=50K\n"
      "25,35,F,<=50K\n"
      "52,60,M,>50K\n";
  const Dataset ds = parse_dataset(csv, adult_schema(), {false});
  CHECK(ds.labels() == std::vector<int>{1, -1, -1, 1});
  CHECK(ds.cols() == 3);
  CHECK(ds.row(1)[1] == 41.0);
}

TEST_CASE("group ids follow first appearance") {
  const std::string csv =
      "age,hours,sex,income\n"
      "1,1,a,>50K\n"
      "2,2,b,<=50K\n"
      "3,3,a,<=50K\n"
      "4,4,b,>50K\n";
  const Dataset ds = parse_dataset(csv, adult_schema(), {false});
  CHECK(ds.groups() == std::vector<int>{0, 1, 0, 1});
  CHECK(ds.num_groups() == 2);
  CHECK(ds.group_names() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("a non-numeric feature cell is a parse error naming its row") {
  const std::string csv =
      "age,hours,sex,income\n"
      "1,1,a,>50K\n"
      "2,2,b,<=50K\n"
      "x,3,a,<=50K\n";
  try {
    parse_dataset(csv, adult_schema());
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
}

TEST_CASE("quoted csv fields keep embedded commas and quotes") {
  const auto rec = parse_csv("a,b\n\"x,y\",\"say \"\"hi\"\"\"\n");
  REQUIRE(rec.size() == 2);
  CHECK(rec[1][0] == "x,y");
  CHECK(rec[1][1] == "say \"hi\"");
}

TEST_CASE("standardization leaves the intercept and zero-centres features") {
  const Dataset ds = fixtures::blobs(50, 2, 3.0, 1).standardized();
  for (std::size_t c = 1; c < ds.cols(); ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) mean += ds.row(i)[c];
    mean /= static_cast<double>(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) sq += (ds.row(i)[c] - mean) * (ds.row(i)[c] - mean);
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::sqrt(sq / static_cast<double>(ds.size())) == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (std::size_t i = 0; i < ds.size(); ++i) REQUIRE(ds.row(i)[0] == 1.0);
}

TEST_CASE("split of 100 balanced rows is 80/20 per stratum") {
  const Dataset ds = fixtures::blobs(25, 2, 2.0, 5);  // 4 strata of 25
  const Split s = split(ds, {0.2, 0.0, 9});
  CHECK(s.train.size() == 80);
  CHECK(s.test.size() == 20);
  CHECK_FALSE(s.validation.has_value());
  for (int z : {0, 1})
    for (int y : {kPositive, kNegative}) {
      CHECK(s.test.count(z, y) >= 4);
      CHECK(s.test.count(z, y) <= 6);
    }
}

TEST_CASE("split is deterministic and the parts partition the rows") {
  const Dataset ds = fixtures::blobs(40, 2, 2.0, 5);
  const Split a = split(ds, {0.2, 0.1, 3});
  const Split b = split(ds, {0.2, 0.1, 3});
  CHECK(a.train_rows == b.train_rows);
  CHECK(a.test_rows == b.test_rows);
  CHECK(a.validation_rows == b.validation_rows);
  std::vector<std::size_t> all = a.train_rows;
  all.insert(all.end(), a.validation_rows.begin(), a.validation_rows.end());
  all.insert(all.end(), a.test_rows.begin(), a.test_rows.end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expected(ds.size());
  std::iota(expected.begin(), expected.end(), 0);
  CHECK(all == expected);
  const Split c = split(ds, {0.2, 0.1, 4});
  CHECK(a.test_rows != c.test_rows);
}

TEST_CASE("a stratum too small for the partitions is a stratification error") {
  Dataset ds({1, 0, 1, 1, 1, 2, 1, 3}, 2, {1, -1, -1, -1}, {0, 0, 0, 0}, {"only"});
  CHECK(code_of([&] { split(ds, {0.2, 0.1, 0}); }) == ErrorCode::Stratification);
}

TEST_CASE("zero noise leaves labels unchanged") {
  const Dataset ds = fixtures::blobs(100, 2, 1.0, 2);
  const Dataset noisy = inject_noise(ds, NoiseSpec({{0, 0}, {0, 0}}), 7);
  CHECK(noisy.labels() == ds.labels());
}

TEST_CASE("noise spec rejects rates whose sum reaches one") {
  CHECK(code_of([] { NoiseSpec({{1.0, 1.0}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { NoiseSpec({{0.5, 0.5}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { NoiseSpec({{-0.1, 0.2}}); }) == ErrorCode::InvalidArgument);
  CHECK_NOTHROW(NoiseSpec({{0.45, 0.5}}));
}

TEST_CASE("empirical flip fraction concentrates at eps_plus") {
  // n = 1e5 positives; binomial sd is about 0.0015, so 0.01 is > 6 sd.
  const std::size_t n = 100000;
  std::vector<double> f(n, 1.0);
  const Dataset ds(f, 1, std::vector<int>(n, kPositive), std::vector<int>(n, 0), {"g"});
  const Dataset noisy = inject_noise(ds, NoiseSpec({{0.3, 0.0}}), 11);
  const auto rates = empirical_flip_rates(ds, noisy);
  CHECK(std::abs(rates[0].eps_plus() - 0.3) < 0.01);
}

TEST_CASE("flip counting") {
  std::vector<double> f(10, 1.0);
  const Dataset clean(f, 1, std::vector<int>(10, kPositive), std::vector<int>(10, 0), {"g"});
  std::vector<int> noisy_labels(10, kPositive);
  noisy_labels[1] = noisy_labels[4] = noisy_labels[8] = kNegative;
  const auto rates = empirical_flip_rates(clean, clean.with_labels(noisy_labels));
  CHECK(rates[0].eps_plus() == doctest::Approx(0.3));
  CHECK(empirical_flip_rates(clean, clean)[0].eps_plus() == 0.0);
}

TEST_CASE("property: per-group changed fraction matches the mixed flip rate") {
  // Random specs on a two-group dataset of 1e5 rows with skewed priors.
  const Philox gen(2024);
  const std::size_t n = 100000;
  std::vector<double> f(n, 1.0);
  std::vector<int> y(n), g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = static_cast<int>(i % 2);
    y[i] = gen.uniform(10, i) < (g[i] == 0 ? 0.3 : 0.6) ? kPositive : kNegative;
  }
  const Dataset ds(f, 1, y, g, {"a", "b"});
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    std::vector<GroupNoise> rates;
    for (int z = 0; z < 2; ++z) {
      const double ep = 0.45 * gen.uniform(11, trial * 4 + 2 * z);
      const double em = 0.45 * gen.uniform(11, trial * 4 + 2 * z + 1);
      rates.push_back({ep, em});
    }
    const Dataset noisy = inject_noise(ds, NoiseSpec(rates), trial);
    for (int z = 0; z < 2; ++z) {
      const double pos = double(ds.count(z, kPositive)) / double(ds.group_size(z));
      const double expected = rates[z].eps_plus * pos + rates[z].eps_minus * (1.0 - pos);
      std::size_t changed = 0;
      for (std::size_t i = 0; i < n; ++i) changed += (ds.group(i) == z && ds.label(i) != noisy.label(i));
      CHECK(std::abs(double(changed) / double(ds.group_size(z)) - expected) < 0.01);
    }
  }
}

TEST_CASE("noise draws are keyed by stream index, not row position") {
  const Dataset ds = fixtures::blobs(200, 2, 1.0, 3);
  const NoiseSpec spec({{0.3, 0.2}, {0.1, 0.4}});
  const Dataset full = inject_noise(ds, spec, 5);
  const Split s = split(ds, {0.2, 0.0, 1});
  std::vector<std::uint64_t> idx(s.train_rows.begin(), s.train_rows.end());
  const Dataset part = inject_noise(s.train, spec, 5, idx);
  for (std::size_t k = 0; k < idx.size(); ++k) REQUIRE(part.label(k) == full.label(s.train_rows[k]));
}

TEST_CASE("noise spec json resolves group names and rejects gaps") {
  const std::vector<std::string> names{"female", "male"};
  const auto spec = NoiseSpec::from_json(
      {{"male", {{"eps_plus", 0.55}, {"eps_minus", 0.35}}}, {"female", {{"eps_plus", 0.15}, {"eps_minus", 0.45}}}},
      names);
  CHECK(spec[0].eps_plus == 0.15);
  CHECK(spec[1].delta() == doctest::Approx(0.1));
  CHECK(code_of([&] { NoiseSpec::from_json({{"female", {{"eps_plus", 0.1}, {"eps_minus", 0.1}}}}, names); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("dataset constructor enforces its invariants") {
  CHECK(code_of([] { Dataset({1, 0}, 2, {2}, {0}, {"g"}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { Dataset({0, 0}, 2, {1}, {0}, {"g"}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { Dataset({1, 0}, 2, {1}, {0}, {"g", "empty"}); }) == ErrorCode::InvalidArgument);
}
