#include "noisefair/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "noisefair/error.hpp"
#include "noisefair/model.hpp"
#include "noisefair/rng.hpp"
#include "noisefair/synth.hpp"

namespace noisefair {

using nlohmann::json;
namespace fs = std::filesystem;

Method parse_method(const std::string& s) {
  if (s == "clean") return Method::Clean;
  if (s == "corrupt") return Method::Corrupt;
  if (s == "surrogate") return Method::Surrogate;
  if (s == "group_peer") return Method::GroupPeer;
  fail(ErrorCode::InvalidArgument, "unknown method '" + s + "' (expected clean, corrupt, surrogate or group_peer)");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Clean: return "clean";
    case Method::Corrupt: return "corrupt";
    case Method::Surrogate: return "surrogate";
    case Method::GroupPeer: return "group_peer";
  }
  return "?";
}

Knowledge parse_knowledge(const std::string& s) {
  if (s == "true") return Knowledge::True;
  if (s == "estimated") return Knowledge::Estimated;
  if (s == "none") return Knowledge::None;
  fail(ErrorCode::InvalidArgument, "unknown noise knowledge '" + s + "' (expected true or estimated)");
}

std::string to_string(Knowledge k) {
  switch (k) {
    case Knowledge::None: return "none";
    case Knowledge::True: return "true";
    case Knowledge::Estimated: return "estimated";
  }
  return "?";
}

namespace {

bool corrected(Method m) { return m == Method::Surrogate || m == Method::GroupPeer; }

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  require(!methods.empty(), "experiment: methods must be nonempty");
  require(!seeds.empty(), "experiment: seeds must be nonempty");
  require(dataset.is_object() && (dataset.contains("synthetic") || dataset.contains("csv")),
          "experiment: dataset needs a 'synthetic' spec or a 'csv' path");
  require(noise.is_object(), "experiment: noise must be an object keyed by group name");
  {
    // Group names are only known once data is loaded; rates are checked now.
    std::vector<std::string> names;
    for (auto it = noise.begin(); it != noise.end(); ++it) names.push_back(it.key());
    try {
      (void)NoiseSpec::from_json(noise, names);
    } catch (const json::exception& e) {
      fail(ErrorCode::Parse, std::string("experiment: noise: ") + e.what());
    }
  }
  require(delta >= 0.0 && delta <= 1.0, "experiment: delta must lie in [0, 1]");
  require(test_fraction > 0.0 && test_fraction < 1.0, "experiment: test_fraction must lie in (0, 1)");
  require(validation_fraction > 0.0 && test_fraction + validation_fraction < 1.0,
          "experiment: validation_fraction must be positive and leave room for training");
  require(estimator_folds >= 2, "experiment: estimator_folds must be >= 2");
  require(estimator_epochs >= 1, "experiment: estimator_epochs must be >= 1");
  const bool any_corrected = std::any_of(methods.begin(), methods.end(), corrected);
  require(!any_corrected || !knowledge.empty(), "experiment: corrected methods need at least one noise_knowledge");
  for (Knowledge k : knowledge) require(k != Knowledge::None, "experiment: noise_knowledge must be true or estimated");
  if (std::find(methods.begin(), methods.end(), Method::GroupPeer) != methods.end())
    require(!alpha_grid.empty(), "experiment: group_peer needs a nonempty alpha_grid");
  train.validate();
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::string& base_dir) {
  try {
    require(j.is_object(), "experiment: config must be a JSON object");
    static const std::vector<std::string> known = {
        "data", "csv", "label_column", "positive_symbol", "group_column", "feature_columns", "synthetic",
        "noise", "constraint", "methods", "noise_knowledge", "seeds", "train", "alpha_grid",
        "test_fraction", "validation_fraction", "estimator_folds", "estimator_epochs", "output_dir"};
    for (auto it = j.begin(); it != j.end(); ++it)
      require(std::find(known.begin(), known.end(), it.key()) != known.end(),
              "experiment: unknown key '" + it.key() + "'");
    ExperimentConfig c;
    if (j.contains("synthetic")) {
      c.dataset = {{"synthetic", j.at("synthetic")}};
    } else {
      const std::string key = j.contains("csv") ? "csv" : "data";
      require(j.contains(key), "experiment: dataset needs a 'synthetic' spec or a 'csv' path");
      fs::path p = j.at(key).get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
      c.dataset = {{"csv", p.string()}};
      for (const char* k : {"label_column", "positive_symbol", "group_column", "feature_columns"})
        if (j.contains(k)) c.dataset[k] = j.at(k);
      Schema::from_json(c.dataset);
    }
    c.noise = j.at("noise");
    if (j.contains("constraint")) {
      const auto& cs = j.at("constraint");
      if (cs.contains("metric")) c.metric = parse_metric(cs.at("metric").get<std::string>());
      if (cs.contains("delta")) c.delta = cs.at("delta").get<double>();
      if (cs.contains("noise_model")) c.noise_model = parse_noise_model(cs.at("noise_model").get<std::string>());
    }
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (j.contains("noise_knowledge")) {
      c.knowledge.clear();
      const auto& nk = j.at("noise_knowledge");
      if (nk.is_string()) {
        c.knowledge.push_back(parse_knowledge(nk.get<std::string>()));
      } else {
        for (const auto& k : nk) c.knowledge.push_back(parse_knowledge(k.get<std::string>()));
      }
    }
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("train")) c.train.apply_json(j.at("train"));
    if (j.contains("alpha_grid")) c.alpha_grid = j.at("alpha_grid").get<std::vector<double>>();
    c.test_fraction = j.value("test_fraction", c.test_fraction);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.estimator_folds = j.value("estimator_folds", c.estimator_folds);
    c.estimator_epochs = j.value("estimator_epochs", c.estimator_epochs);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("experiment config: ") + e.what());
  }
}

json ExperimentConfig::to_json() const {
  json j = dataset;
  j["noise"] = noise;
  j["constraint"] = {{"metric", noisefair::to_string(metric)}, {"delta", delta}, {"noise_model", noisefair::to_string(noise_model)}};
  json ms = json::array();
  for (Method m : methods) ms.push_back(noisefair::to_string(m));
  j["methods"] = ms;
  json ks = json::array();
  for (Knowledge k : knowledge) ks.push_back(noisefair::to_string(k));
  j["noise_knowledge"] = ks;
  j["seeds"] = seeds;
  j["train"] = train.to_json();
  j["alpha_grid"] = alpha_grid;
  j["test_fraction"] = test_fraction;
  j["validation_fraction"] = validation_fraction;
  j["estimator_folds"] = estimator_folds;
  j["estimator_epochs"] = estimator_epochs;
  j["output_dir"] = output_dir;
  return j;
}

Dataset load_experiment_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.dataset.contains("synthetic")) {
    SynthSpec spec = SynthSpec::from_json(cfg.dataset.at("synthetic"));
    spec.seed = derive_seed(spec.seed, seed);
    return synth_generate(spec);
  }
  return load_dataset(cfg.dataset.at("csv").get<std::string>(), Schema::from_json(cfg.dataset),
                      LoadOptions{.standardize = false});
}

namespace {

double clean_violation(const RandomizedClassifier& c, const Dataset& ds, Metric metric, LabelFlavor flavor) {
  const auto p = positive_probabilities(c, ds);
  return violation(raw_statistic(confusion(p, ds, flavor), metric));
}

std::vector<std::uint64_t> as_stream_index(const std::vector<std::size_t>& rows) {
  return {rows.begin(), rows.end()};
}

struct SeedOutcome {
  std::vector<ResultRow> rows;
  std::exception_ptr error;
};

SeedOutcome run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedOutcome out;
  Method current = cfg.methods.front();
  const auto with_context = [&](const std::string& stage, const std::string& what) {
    return "method '" + to_string(current) + "', seed " + std::to_string(seed) + " (" + stage + "): " + what;
  };
  std::string stage = "data";
  try {
    const Dataset raw = load_experiment_data(cfg, seed);
    const NoiseSpec spec = NoiseSpec::from_json(cfg.noise, raw.group_names());
    const Split sp = split(raw, SplitConfig{cfg.test_fraction, cfg.validation_fraction, seed});
    const Dataset train = sp.train.standardized();
    const Dataset val = sp.validation->standardized_with(train.standardizer());
    const Dataset test = sp.test.standardized_with(train.standardizer());
    const Dataset train_noisy = inject_noise(train, spec, seed, as_stream_index(sp.train_rows));
    const Dataset val_noisy = inject_noise(val, spec, seed, as_stream_index(sp.validation_rows));

    TrainConfig tc = cfg.train;
    tc.seed = seed;

    std::optional<NoiseEstimate> est_true, est_hat;
    const bool any_corrected = std::any_of(cfg.methods.begin(), cfg.methods.end(), corrected);
    if (any_corrected) {
      for (Knowledge k : cfg.knowledge) {
        if (k == Knowledge::True && !est_true) est_true = NoiseEstimate::from_spec(spec, train_noisy);
        if (k == Knowledge::Estimated && !est_hat) {
          stage = "noise estimation";
          est_hat = estimate_noise_from_data(train_noisy, EstimatorConfig{cfg.estimator_folds, seed, cfg.estimator_epochs});
        }
      }
    }

    const auto rates_report = [&](Knowledge k) {
      std::vector<GroupRatesReport> r;
      for (std::size_t z = 0; z < spec.num_groups(); ++z) {
        GroupRatesReport g{raw.group_names()[z], spec[z].eps_plus, spec[z].eps_minus, std::nullopt, std::nullopt};
        const NoiseEstimate* e = k == Knowledge::True ? &*est_true : k == Knowledge::Estimated ? &*est_hat : nullptr;
        if (e) {
          g.est_eps_plus = e->groups[z].eps_plus;
          g.est_eps_minus = e->groups[z].eps_minus;
        }
        r.push_back(std::move(g));
      }
      return r;
    };

    const auto evaluate = [&](Method m, Knowledge k, const RandomizedClassifier& c, std::optional<double> alpha,
                              double seconds) {
      ResultRow row;
      row.method = m;
      row.knowledge = k;
      row.seed = seed;
      row.test_accuracy = accuracy(c, test);
      row.test_violation = clean_violation(c, test, cfg.metric, LabelFlavor::Clean);
      row.train_noisy_violation = clean_violation(c, train_noisy, cfg.metric, LabelFlavor::Noisy);
      row.alpha = alpha;
      row.rates = rates_report(k);
      row.seconds = seconds;
      out.rows.push_back(std::move(row));
    };

    using Clock = std::chrono::steady_clock;
    const auto elapsed = [](Clock::time_point t0) {
      return std::chrono::duration<double>(Clock::now() - t0).count();
    };

    for (Method m : cfg.methods) {
      current = m;
      stage = "training";
      if (!corrected(m)) {
        const auto t0 = Clock::now();
        const Dataset& tr = m == Method::Clean ? train : train_noisy;
        const Dataset& va = m == Method::Clean ? val : val_noisy;
        const ConstraintSpec cs{cfg.metric, cfg.delta, Correction::None, std::nullopt};
        const ConstrainedFit fit = fit_constrained(tr, LossSpec{}, cs, tc, &va);
        evaluate(m, Knowledge::None, fit.classifier, std::nullopt, elapsed(t0));
        continue;
      }
      for (Knowledge k : cfg.knowledge) {
        const auto t0 = Clock::now();
        const NoiseEstimate& est = k == Knowledge::True ? *est_true : *est_hat;
        if (m == Method::Surrogate) {
          const ConstraintSpec cs{cfg.metric, cfg.delta, Correction::Surrogate, est, cfg.noise_model};
          const LossSpec ls{Objective::Surrogate, LossKind::logistic(), est, 1.0};
          const ConstrainedFit fit = fit_constrained(train_noisy, ls, cs, tc, &val_noisy);
          evaluate(m, k, fit.classifier, std::nullopt, elapsed(t0));
        } else {
          const ConstraintSpec cs{cfg.metric, cfg.delta, Correction::Peer, est, cfg.noise_model};
          const AlphaTuning tuned = tune_alpha(train_noisy, val_noisy, cfg.alpha_grid, est, cs, tc);
          evaluate(m, k, tuned.best_classifier, tuned.best_alpha, elapsed(t0));
        }
      }
    }
  } catch (const Error& e) {
    out.error = std::make_exception_ptr(Error(e.code(), with_context(stage, e.what())));
  } catch (const std::exception& e) {
    out.error = std::make_exception_ptr(Error(ErrorCode::InvalidArgument, with_context(stage, e.what())));
  }
  return out;
}

std::size_t method_rank(const ExperimentConfig& cfg, Method m) {
  return static_cast<std::size_t>(std::find(cfg.methods.begin(), cfg.methods.end(), m) - cfg.methods.begin());
}

std::size_t knowledge_rank(const ExperimentConfig& cfg, Knowledge k) {
  if (k == Knowledge::None) return 0;
  return 1 + static_cast<std::size_t>(std::find(cfg.knowledge.begin(), cfg.knowledge.end(), k) - cfg.knowledge.begin());
}

std::string timings_csv(const std::vector<ResultRow>& rows) {
  std::string s = "method,noise_knowledge,seed,seconds\n";
  for (const auto& r : rows)
    s += to_string(r.method) + "," + to_string(r.knowledge) + "," + std::to_string(r.seed) + "," +
         fmt_double(r.seconds) + "\n";
  return s;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) fail(ErrorCode::Io, "cannot write '" + p.string() + "'");
  f << text;
  if (!f) fail(ErrorCode::Io, "write failed for '" + p.string() + "'");
}

SummaryStat stat(const std::vector<double>& v) {
  SummaryStat s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

// Values go through the same formatting as the CSV so the summary can be
// recomputed from it exactly.
double as_written(double v) { return std::strtod(fmt_double(v).c_str(), nullptr); }

}  // namespace

std::vector<MethodSummary> summarize(const std::vector<ResultRow>& rows) {
  std::vector<MethodSummary> out;
  std::vector<std::array<std::vector<double>, 3>> values;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const MethodSummary& s) { return s.method == r.method && s.knowledge == r.knowledge; });
    std::size_t idx = static_cast<std::size_t>(it - out.begin());
    if (it == out.end()) {
      out.push_back({r.method, r.knowledge, 0, {}, {}, {}});
      values.emplace_back();
    }
    ++out[idx].runs;
    values[idx][0].push_back(as_written(r.test_accuracy));
    values[idx][1].push_back(as_written(r.test_violation));
    values[idx][2].push_back(as_written(r.train_noisy_violation));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].accuracy = stat(values[i][0]);
    out[i].violation = stat(values[i][1]);
    out[i].noisy_violation = stat(values[i][2]);
  }
  return out;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream s;
  s << "method,noise_knowledge,seed,test_accuracy,test_violation,train_noisy_violation,alpha";
  const std::vector<GroupRatesReport>* groups = rows.empty() ? nullptr : &rows.front().rates;
  if (groups)
    for (const auto& g : *groups)
      s << ",true_eps_plus[" << g.group << "],true_eps_minus[" << g.group << "],est_eps_plus[" << g.group
        << "],est_eps_minus[" << g.group << "]";
  s << "\n";
  const auto opt = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
  for (const auto& r : rows) {
    s << to_string(r.method) << "," << to_string(r.knowledge) << "," << r.seed << "," << fmt_double(r.test_accuracy)
      << "," << fmt_double(r.test_violation) << "," << fmt_double(r.train_noisy_violation) << "," << opt(r.alpha);
    for (const auto& g : r.rates)
      s << "," << fmt_double(g.true_eps_plus) << "," << fmt_double(g.true_eps_minus) << "," << opt(g.est_eps_plus)
        << "," << opt(g.est_eps_minus);
    s << "\n";
  }
  return s.str();
}

json summary_json(const std::vector<MethodSummary>& summary, double delta) {
  json methods = json::array();
  const auto st = [](const SummaryStat& s) { return json{{"mean", s.mean}, {"std", s.std}}; };
  for (const auto& m : summary)
    methods.push_back({{"method", to_string(m.method)},
                       {"noise_knowledge", to_string(m.knowledge)},
                       {"runs", m.runs},
                       {"test_accuracy", st(m.accuracy)},
                       {"test_violation", st(m.violation)},
                       {"train_noisy_violation", st(m.noisy_violation)}});
  return json{{"delta", delta}, {"methods", methods}};
}

BenchmarkResult run_benchmark(const ExperimentConfig& cfg, int jobs, bool write) {
  cfg.validate();
  std::vector<SeedOutcome> outcomes(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) outcomes[i] = run_seed(cfg, cfg.seeds[i]);
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), cfg.seeds.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  BenchmarkResult result;
  std::exception_ptr first_error;
  for (auto& o : outcomes) {
    result.rows.insert(result.rows.end(), o.rows.begin(), o.rows.end());
    if (o.error && !first_error) first_error = o.error;
  }
  std::stable_sort(result.rows.begin(), result.rows.end(), [&](const ResultRow& a, const ResultRow& b) {
    const auto ka = std::make_pair(method_rank(cfg, a.method), knowledge_rank(cfg, a.knowledge));
    const auto kb = std::make_pair(method_rank(cfg, b.method), knowledge_rank(cfg, b.knowledge));
    return ka < kb;
  });
  result.summary = summarize(result.rows);

  if (write) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create output directory '" + cfg.output_dir + "': " + ec.message());
    const fs::path dir(cfg.output_dir);
    write_file(dir / "results.csv", results_csv(result.rows));
    write_file(dir / "summary.json", summary_json(result.summary, cfg.delta).dump(2) + "\n");
    write_file(dir / "timings.csv", timings_csv(result.rows));
    write_file(dir / "config.json", cfg.to_json().dump(2) + "\n");
  }
  if (first_error) std::rethrow_exception(first_error);
  return result;
}

SweepResult run_noise_sweep(const SweepConfig& cfg, int jobs, bool write) {
  require(!cfg.grid.empty(), "sweep: eps grid must be nonempty");
  for (double e : cfg.grid) require(e >= 0.0 && e < 0.5, "sweep: eps must lie in [0, 0.5)");
  const Dataset probe = load_experiment_data(cfg.base, cfg.base.seeds.front());
  const auto& names = probe.group_names();
  const std::string noisy = cfg.noisy_group.empty() ? names.front() : cfg.noisy_group;
  probe.group_id(noisy);

  SweepResult out;
  out.grid = cfg.grid;
  std::string csv = "eps,method,noise_knowledge,seed,metric,value\n";
  json summary = json::array();
  for (double e : cfg.grid) {
    ExperimentConfig c = cfg.base;
    c.noise = json::object();
    for (const auto& g : names) {
      const double r = g == noisy ? e : 0.0;
      c.noise[g] = {{"eps_plus", r}, {"eps_minus", r}};
    }
    BenchmarkResult br = run_benchmark(c, jobs, false);
    for (const auto& r : br.rows) {
      const std::string prefix =
          fmt_double(e) + "," + to_string(r.method) + "," + to_string(r.knowledge) + "," + std::to_string(r.seed) + ",";
      csv += prefix + "test_accuracy," + fmt_double(r.test_accuracy) + "\n";
      csv += prefix + "test_violation," + fmt_double(r.test_violation) + "\n";
      csv += prefix + "train_noisy_violation," + fmt_double(r.train_noisy_violation) + "\n";
    }
    summary.push_back({{"eps", e}, {"summary", summary_json(br.summary, c.delta)}});
    out.points.push_back(std::move(br));
  }
  if (write) {
    std::error_code ec;
    fs::create_directories(cfg.base.output_dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create output directory '" + cfg.base.output_dir + "': " + ec.message());
    const fs::path dir(cfg.base.output_dir);
    write_file(dir / "sweep.csv", csv);
    write_file(dir / "sweep_summary.json", json{{"noisy_group", noisy}, {"points", summary}}.dump(2) + "\n");
  }
  return out;
}

int resolve_jobs(std::optional<int> flag) {
  if (flag) {
    require(*flag >= 1, "--jobs must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("NOISEFAIR_JOBS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    require(end != env && *end == '\0' && v >= 1, std::string("NOISEFAIR_JOBS must be a positive integer, got '") + env + "'");
    return static_cast<int>(v);
  }
  return 1;
}

}  // namespace noisefair
