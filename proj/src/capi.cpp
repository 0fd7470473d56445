#include "noisefair/noisefair.h"

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "noisefair/bench.hpp"
#include "noisefair/dataset.hpp"
#include "noisefair/error.hpp"
#include "noisefair/model.hpp"
#include "noisefair/noise_estimation.hpp"
#include "noisefair/synth.hpp"
#include "noisefair/theory.hpp"
#include "noisefair/trainer.hpp"

struct nf_dataset {
  noisefair::Dataset ds;
};

struct nf_estimate {
  noisefair::NoiseEstimate est;
};

struct nf_model {
  noisefair::RandomizedClassifier classifier;
  noisefair::Standardizer standardizer;
  std::vector<std::string> feature_names;
  std::string fingerprint;
};

namespace {

using nlohmann::json;
using noisefair::Error;
using noisefair::ErrorCode;

thread_local std::string last_error;

nf_status status_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return NF_INVALID_ARGUMENT;
    case ErrorCode::Parse: return NF_PARSE_ERROR;
    case ErrorCode::Io: return NF_IO_ERROR;
    case ErrorCode::Stratification: return NF_STRATIFICATION_ERROR;
    case ErrorCode::Estimation: return NF_ESTIMATION_ERROR;
    case ErrorCode::Divergence: return NF_DIVERGENCE;
    case ErrorCode::Verification: return NF_VERIFICATION_FAILED;
    case ErrorCode::Hypothesis: return NF_HYPOTHESIS_VIOLATED;
  }
  return NF_INTERNAL_ERROR;
}

template <typename F>
nf_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return NF_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const json::exception& e) {
    last_error = e.what();
    return NF_PARSE_ERROR;
  } catch (const std::exception& e) {
    last_error = e.what();
    return NF_INTERNAL_ERROR;
  } catch (...) {
    last_error = "unknown error";
    return NF_INTERNAL_ERROR;
  }
}

void need(const void* p, const char* what) {
  if (!p) noisefair::fail(ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

json parse_json(const char* text, const char* what) {
  need(text, what);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    noisefair::fail(ErrorCode::Parse, std::string(what) + ": " + e.what());
  }
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

noisefair::Objective parse_objective(const std::string& s) {
  if (s == "plain") return noisefair::Objective::Plain;
  if (s == "surrogate") return noisefair::Objective::Surrogate;
  if (s == "group_peer") return noisefair::Objective::GroupPeer;
  noisefair::fail(ErrorCode::InvalidArgument, "unknown objective '" + s + "' (expected plain, surrogate or group_peer)");
}

}  // namespace

extern "C" {

const char* nf_version(void) { return "1.0.0"; }

const char* nf_last_error(void) { return last_error.c_str(); }

void nf_string_free(char* s) { delete[] s; }

nf_status nf_dataset_load_csv(const char* path, const char* schema_json, int standardize, nf_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const auto schema = noisefair::Schema::from_json(parse_json(schema_json, "schema"));
    *out = new nf_dataset{noisefair::load_dataset(path, schema, noisefair::LoadOptions{standardize != 0})};
  });
}

nf_status nf_dataset_synth(const char* spec_json, nf_dataset** out) {
  return guarded([&] {
    need(out, "out");
    const auto spec = noisefair::SynthSpec::from_json(parse_json(spec_json, "synth spec"));
    *out = new nf_dataset{noisefair::synth_generate(spec)};
  });
}

nf_status nf_dataset_write_csv(const nf_dataset* ds, const char* path) {
  return guarded([&] {
    need(ds, "dataset");
    need(path, "path");
    noisefair::write_csv(ds->ds, path);
  });
}

nf_status nf_dataset_size(const nf_dataset* ds, size_t* rows, size_t* cols, size_t* groups) {
  return guarded([&] {
    need(ds, "dataset");
    if (rows) *rows = ds->ds.size();
    if (cols) *cols = ds->ds.cols();
    if (groups) *groups = ds->ds.num_groups();
  });
}

nf_status nf_dataset_labels(const nf_dataset* ds, int* labels, size_t n) {
  return guarded([&] {
    need(ds, "dataset");
    need(labels, "labels");
    noisefair::require(n == ds->ds.size(), "labels buffer length does not match the dataset");
    std::copy(ds->ds.labels().begin(), ds->ds.labels().end(), labels);
  });
}

nf_status nf_dataset_inject_noise(const nf_dataset* ds, const char* noise_json, uint64_t seed, nf_dataset** out) {
  return guarded([&] {
    need(ds, "dataset");
    need(out, "out");
    const auto spec = noisefair::NoiseSpec::from_json(parse_json(noise_json, "noise spec"), ds->ds.group_names());
    *out = new nf_dataset{noisefair::inject_noise(ds->ds, spec, seed)};
  });
}

void nf_dataset_free(nf_dataset* ds) { delete ds; }

nf_status nf_estimate_noise(const nf_dataset* noisy, int folds, uint64_t seed, nf_estimate** out) {
  return guarded([&] {
    need(noisy, "dataset");
    need(out, "out");
    *out = new nf_estimate{noisefair::estimate_noise_from_data(noisy->ds, noisefair::EstimatorConfig{folds, seed})};
  });
}

nf_status nf_estimate_to_json(const nf_estimate* est, char** json_out) {
  return guarded([&] {
    need(est, "estimate");
    need(json_out, "json_out");
    *json_out = copy_string(est->est.to_json().dump(2));
  });
}

nf_status nf_estimate_from_json(const char* text, nf_estimate** out) {
  return guarded([&] {
    need(out, "out");
    *out = new nf_estimate{noisefair::NoiseEstimate::from_json(parse_json(text, "noise estimate"))};
  });
}

void nf_estimate_free(nf_estimate* est) { delete est; }

nf_status nf_model_train(const nf_dataset* ds, const nf_estimate* est, const char* train_json, nf_model** out) {
  return guarded([&] {
    need(ds, "dataset");
    need(out, "out");
    const json j = train_json ? parse_json(train_json, "train config") : json::object();
    noisefair::TrainConfig cfg;
    if (j.contains("train")) cfg.apply_json(j.at("train"));
    noisefair::LossSpec spec;
    spec.objective = parse_objective(j.value("objective", std::string("plain")));
    spec.alpha = j.value("alpha", 1.0);
    if (est) spec.estimate = est->est;
    noisefair::RandomizedClassifier classifier;
    if (j.contains("constraint")) {
      const auto& c = j.at("constraint");
      noisefair::ConstraintSpec cs;
      cs.metric = noisefair::parse_metric(c.value("metric", std::string("equal_odds")));
      cs.delta = c.value("delta", cs.delta);
      cs.correction = noisefair::parse_correction(c.value("correction", std::string("none")));
      cs.noise_model = noisefair::parse_noise_model(c.value("noise_model", std::string("label_sufficient")));
      if (est) cs.estimate = est->est;
      classifier = noisefair::fit_constrained(ds->ds, spec, cs, cfg).classifier;
    } else {
      classifier = noisefair::RandomizedClassifier::single(noisefair::fit_unconstrained(ds->ds, spec, cfg));
    }
    *out = new nf_model{std::move(classifier), ds->ds.standardizer(), ds->ds.feature_names(), cfg.fingerprint()};
  });
}

nf_status nf_model_predict(const nf_model* model, const nf_dataset* ds, double* positive_prob, size_t n) {
  return guarded([&] {
    need(model, "model");
    need(ds, "dataset");
    need(positive_prob, "positive_prob");
    noisefair::require(n == ds->ds.size(), "output buffer length does not match the dataset");
    noisefair::require(ds->ds.cols() == model->classifier.components.front().weights.size(),
                       "dataset feature count does not match the model");
    // Raw datasets get the model's standardization.
    const bool raw = ds->ds.standardizer().empty() && !model->standardizer.empty();
    const noisefair::Dataset scaled = raw ? ds->ds.standardized_with(model->standardizer) : ds->ds;
    const auto p = noisefair::positive_probabilities(model->classifier, scaled);
    std::copy(p.begin(), p.end(), positive_prob);
  });
}

nf_status nf_model_save(const nf_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    std::ofstream f(path, std::ios::binary);
    if (!f) noisefair::fail(ErrorCode::Io, std::string("cannot write '") + path + "'");
    f << noisefair::model_to_json(model->classifier, model->standardizer, model->feature_names, model->fingerprint)
             .dump(2)
      << "\n";
  });
}

nf_status nf_model_load(const char* path, size_t expected_cols, nf_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    std::ifstream f(path, std::ios::binary);
    if (!f) noisefair::fail(ErrorCode::Io, std::string("cannot read '") + path + "'");
    std::stringstream text;
    text << f.rdbuf();
    auto loaded = noisefair::model_from_json(parse_json(text.str().c_str(), "model"), expected_cols);
    *out = new nf_model{std::move(loaded.classifier), std::move(loaded.standardizer), std::move(loaded.feature_names),
                        std::move(loaded.fingerprint)};
  });
}

void nf_model_free(nf_model* model) { delete model; }

nf_status nf_run_benchmark(const char* config_json, const char* base_dir, int jobs, char** summary_out) {
  return guarded([&] {
    const auto cfg = noisefair::ExperimentConfig::from_json(parse_json(config_json, "experiment config"),
                                                            base_dir ? base_dir : "");
    const auto result = noisefair::run_benchmark(cfg, noisefair::resolve_jobs(jobs > 0 ? std::optional<int>(jobs) : std::nullopt));
    if (summary_out) *summary_out = copy_string(noisefair::summary_json(result.summary, cfg.delta).dump(2));
  });
}

nf_status nf_noise_sweep(const char* sweep_json, const char* base_dir, int jobs, char** summary_out) {
  return guarded([&] {
    const json j = parse_json(sweep_json, "sweep config");
    noisefair::SweepConfig cfg;
    json base = j.at("base");
    if (!base.contains("noise")) base["noise"] = json::object();
    cfg.base = noisefair::ExperimentConfig::from_json(base, base_dir ? base_dir : "");
    if (j.contains("grid")) cfg.grid = j.at("grid").get<std::vector<double>>();
    cfg.noisy_group = j.value("noisy_group", std::string());
    const auto result =
        noisefair::run_noise_sweep(cfg, noisefair::resolve_jobs(jobs > 0 ? std::optional<int>(jobs) : std::nullopt));
    if (summary_out) {
      json points = json::array();
      for (std::size_t k = 0; k < result.grid.size(); ++k)
        points.push_back({{"eps", result.grid[k]}, {"summary", noisefair::summary_json(result.points[k].summary, cfg.base.delta)}});
      *summary_out = copy_string(points.dump(2));
    }
  });
}

nf_status nf_verify_theory(int include_training, int* passed, char** report_out) {
  return guarded([&] {
    const auto report = noisefair::verify_theory(include_training != 0);
    if (passed) *passed = report.passed() ? 1 : 0;
    if (report_out) *report_out = copy_string(report.to_json().dump(2));
  });
}

}  // extern "C"
