#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "noisefair/bench.hpp"
#include "noisefair/error.hpp"
#include "noisefair/rng.hpp"
#include "noisefair/synth.hpp"

using namespace noisefair;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_synth(std::size_t per_cluster = 150) {
  json clusters = json::array();
  const json cov = {{1.0, 0.2}, {0.2, 1.0}};
  for (int z = 0; z < 2; ++z)
    for (int y : {1, -1})
      clusters.push_back({{"group", z},
                          {"label", y},
                          {"count", per_cluster},
                          {"mean", {y * (0.8 + 0.4 * z), y * 0.5}},
                          {"cov", cov}});
  return {{"group_names", {"a", "b"}}, {"clusters", clusters}, {"seed", 4}};
}

json small_config(const std::string& out_dir) {
  return {{"synthetic", small_synth()},
          {"noise", {{"a", {{"eps_plus", 0.1}, {"eps_minus", 0.2}}}, {"b", {{"eps_plus", 0.3}, {"eps_minus", 0.1}}}}},
          {"constraint", {{"metric", "equal_odds"}, {"delta", 0.05}}},
          {"methods", {"clean", "corrupt", "surrogate", "group_peer"}},
          {"noise_knowledge", {"true"}},
          {"seeds", {1, 2}},
          {"train", {{"epochs", 5}, {"outer_rounds", 5}, {"multiplier_step", 0.3}}},
          {"alpha_grid", {0.0, 1.0}},
          {"output_dir", out_dir}};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("noisefair_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("method and knowledge names round trip") {
  for (Method m : {Method::Clean, Method::Corrupt, Method::Surrogate, Method::GroupPeer})
    CHECK(parse_method(to_string(m)) == m);
  for (Knowledge k : {Knowledge::None, Knowledge::True, Knowledge::Estimated}) CHECK(parse_knowledge(to_string(k)) == k);
  CHECK_THROWS_AS(parse_method("fairlearn"), Error);
}

TEST_CASE("experiment config rejects unknown keys and bad values") {
  json j = small_config("x");
  j["epochs"] = 3;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), Error);
  j = small_config("x");
  j["seeds"] = json::array();
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), Error);
  j = small_config("x");
  j["noise"]["b"]["eps_plus"] = 0.95;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), Error);
}

TEST_CASE("experiment config json round trip") {
  const auto cfg = ExperimentConfig::from_json(small_config("out"));
  const auto again = ExperimentConfig::from_json(cfg.to_json());
  CHECK(again.to_json() == cfg.to_json());
  CHECK(again.delta == 0.05);
  CHECK(again.seeds == std::vector<std::uint64_t>{1, 2});
}

TEST_CASE("jobs resolution") {
  CHECK(resolve_jobs(3) == 3);
  CHECK_THROWS_AS(resolve_jobs(0), Error);
}

TEST_CASE("a clean-only run without noise equals a direct fit") {
  json j = small_config("");
  j["methods"] = {"clean"};
  j["noise"] = {{"a", {{"eps_plus", 0.0}, {"eps_minus", 0.0}}}, {"b", {{"eps_plus", 0.0}, {"eps_minus", 0.0}}}};
  j["seeds"] = {3};
  const auto cfg = ExperimentConfig::from_json(j);
  const auto result = run_benchmark(cfg, 1, false);
  REQUIRE(result.rows.size() == 1);

  const Dataset raw = synth_generate(SynthSpec::from_json([&] {
    json s = small_synth();
    s["seed"] = derive_seed(4, 3);
    return s;
  }()));
  const Split sp = split(raw, {cfg.test_fraction, cfg.validation_fraction, 3});
  const Dataset train = sp.train.standardized();
  const Dataset val = sp.validation->standardized_with(train.standardizer());
  const Dataset test = sp.test.standardized_with(train.standardizer());
  TrainConfig tc = cfg.train;
  tc.seed = 3;
  const auto fit = fit_constrained(train, {}, {cfg.metric, cfg.delta, Correction::None, std::nullopt}, tc, &val);
  CHECK(result.rows[0].test_accuracy == accuracy(fit.classifier, test));
}

TEST_CASE("benchmark outputs are consistent and deterministic") {
  const fs::path dir = scratch("bench");
  const auto cfg = ExperimentConfig::from_json(small_config(dir.string()));
  const auto first = run_benchmark(cfg);
  const std::string csv = slurp(dir / "results.csv");
  const auto second = run_benchmark(cfg, 2);
  CHECK(slurp(dir / "results.csv") == csv);
  CHECK(results_csv(first.rows) == csv);
  CHECK(fs::exists(dir / "summary.json"));
  CHECK(fs::exists(dir / "timings.csv"));
  CHECK(fs::exists(dir / "config.json"));
  CHECK(first.rows.size() == 2 * (2 + 2 * 1));

  // Summary recomputed from the written CSV.
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream h(line);
    for (std::string cell; std::getline(h, cell, ',');) header.push_back(cell);
  }
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  };
  std::map<std::pair<std::string, std::string>, std::vector<double>> viol;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream r(line);
    for (std::string cell; std::getline(r, cell, ',');) cells.push_back(cell);
    viol[{cells[col("method")], cells[col("noise_knowledge")]}].push_back(std::stod(cells[col("test_violation")]));
  }
  const json summary = json::parse(slurp(dir / "summary.json"));
  for (const auto& m : summary.at("methods")) {
    const auto& v = viol.at({m.at("method").get<std::string>(), m.at("noise_knowledge").get<std::string>()});
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    CHECK(m.at("test_violation").at("mean").get<double>() == doctest::Approx(mean).epsilon(1e-12));
    CHECK(m.at("test_violation").at("std").get<double>() == doctest::Approx(sd).epsilon(1e-12));
    CHECK(m.at("runs").get<std::size_t>() == v.size());
  }
  fs::remove_all(dir);
}

TEST_CASE("the clean row does not depend on the noise applied to training labels") {
  json quiet = small_config("");
  quiet["methods"] = {"clean", "corrupt"};
  json loud = quiet;
  loud["noise"]["a"] = {{"eps_plus", 0.4}, {"eps_minus", 0.3}};
  const auto a = run_benchmark(ExperimentConfig::from_json(quiet), 1, false);
  const auto b = run_benchmark(ExperimentConfig::from_json(loud), 1, false);
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    if (a.rows[k].method != Method::Clean) continue;
    CHECK(a.rows[k].test_accuracy == b.rows[k].test_accuracy);
    CHECK(a.rows[k].test_violation == b.rows[k].test_violation);
  }
}

TEST_CASE("run errors carry method and seed context") {
  const fs::path dir = scratch("partial");
  json j = small_config(dir.string());
  j["methods"] = {"clean", "group_peer"};
  j["alpha_grid"] = json::array();
  CHECK_THROWS_AS(run_benchmark(ExperimentConfig::from_json(j)), Error);
  j["alpha_grid"] = {1.0};
  // A stratum smaller than the partition count fails at the data stage.
  json tiny = small_synth(2);
  j["synthetic"] = tiny;
  try {
    run_benchmark(ExperimentConfig::from_json(j));
    FAIL("expected failure");
  } catch (const Error& e) {
    const std::string what = e.what();
    CHECK(what.find("seed 1") != std::string::npos);
    CHECK(what.find("method '") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("sweep writes a long-format table") {
  const fs::path dir = scratch("sweep");
  SweepConfig sc;
  json j = small_config(dir.string());
  j["methods"] = {"corrupt"};
  j["seeds"] = {1};
  sc.base = ExperimentConfig::from_json(j);
  sc.grid = {0.0, 0.2};
  sc.noisy_group = "b";
  const auto r = run_noise_sweep(sc);
  CHECK(r.points.size() == 2);
  const std::string csv = slurp(dir / "sweep.csv");
  CHECK(csv.rfind("eps,method,noise_knowledge,seed,metric,value\n", 0) == 0);
  CHECK(fs::exists(dir / "sweep_summary.json"));
  fs::remove_all(dir);
}

TEST_CASE("a zero-noise sweep point gives corrupt the clean metrics") {
  SweepConfig sc;
  json j = small_config("");
  j["methods"] = {"clean", "corrupt"};
  j["seeds"] = {1};
  sc.base = ExperimentConfig::from_json(j);
  sc.grid = {0.0};
  sc.noisy_group = "a";
  const auto r = run_noise_sweep(sc, 1, false);
  REQUIRE(r.points.size() == 1);
  const auto& rows = r.points[0].rows;
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].test_accuracy == rows[1].test_accuracy);
  CHECK(rows[0].test_violation == rows[1].test_violation);
}
