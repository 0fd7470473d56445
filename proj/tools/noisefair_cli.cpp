// Command-line front end over the C API.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "noisefair/noisefair.h"

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read '" + path + "'");
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string parent_dir(const std::string& path) {
  const auto slash = path.find_last_of('/');
  return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

// Accepts an inline JSON object or a path to a JSON file.
json json_arg(const std::string& arg) {
  if (!arg.empty() && arg.front() == '{') return json::parse(arg);
  return json::parse(read_file(arg));
}

int report(nf_status st) {
  if (st == NF_OK) return 0;
  std::fprintf(stderr, "error (%d): %s\n", static_cast<int>(st), nf_last_error());
  return static_cast<int>(st);
}

struct Overrides {
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  std::vector<std::string> knowledge;
  std::optional<double> delta;
  std::optional<int> jobs;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--seed-list", seeds, "Seeds to run, e.g. 1,2,3")->delimiter(',');
    cmd->add_option("--out-dir", out_dir, "Output directory (overrides output_dir)");
    cmd->add_option("--noise-knowledge", knowledge, "true and/or estimated")
        ->delimiter(',')
        ->check(CLI::IsMember({"true", "estimated"}));
    cmd->add_option("--delta", delta, "Fairness tolerance")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--jobs", jobs, "Parallel seeds (default: NOISEFAIR_JOBS, then 1)")->check(CLI::PositiveNumber);
  }

  void apply(json& cfg) const {
    if (!seeds.empty()) cfg["seeds"] = seeds;
    if (!out_dir.empty()) cfg["output_dir"] = out_dir;
    if (!knowledge.empty()) cfg["noise_knowledge"] = knowledge;
    if (delta) {
      if (!cfg.contains("constraint")) cfg["constraint"] = json::object();
      cfg["constraint"]["delta"] = *delta;
    }
  }

  int jobs_or_zero() const { return jobs.value_or(0); }
};

void print_summary(const std::string& text) {
  const json s = json::parse(text);
  std::printf("%-11s %-10s %5s  %-17s %-17s\n", "method", "knowledge", "runs", "accuracy", "violation");
  for (const auto& m : s.at("methods"))
    std::printf("%-11s %-10s %5d  %.4f +- %.4f  %.4f +- %.4f\n", m.at("method").get<std::string>().c_str(),
                m.at("noise_knowledge").get<std::string>().c_str(), m.at("runs").get<int>(),
                m.at("test_accuracy").at("mean").get<double>(), m.at("test_accuracy").at("std").get<double>(),
                m.at("test_violation").at("mean").get<double>(), m.at("test_violation").at("std").get<double>());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fair classification under group-dependent label noise"};
  app.require_subcommand(1);
  app.set_version_flag("--version", nf_version());

  std::string run_config;
  Overrides run_opts;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", run_config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  run_opts.add_to(run);

  std::string sweep_config, noisy_group;
  std::vector<double> grid;
  Overrides sweep_opts;
  auto* sweep = app.add_subcommand("sweep", "Single-group symmetric noise sweep");
  sweep->add_option("config", sweep_config, "Experiment config JSON (its noise block is replaced)")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--grid", grid, "Noise levels, e.g. 0.1,0.2,0.3,0.4")->delimiter(',');
  sweep->add_option("--noisy-group", noisy_group, "Group receiving the noise (default: first group)");
  sweep_opts.add_to(sweep);

  std::string est_data, est_schema;
  int est_folds = 5;
  std::uint64_t est_seed = 0;
  auto* estimate = app.add_subcommand("estimate", "Estimate per-group noise rates from a noisy CSV");
  estimate->add_option("data", est_data, "CSV with noisy labels")->required()->check(CLI::ExistingFile);
  estimate->add_option("--schema", est_schema, "Schema JSON (file or inline)")->required();
  estimate->add_option("--folds", est_folds, "Cross-fitting folds")->check(CLI::Range(2, 100));
  estimate->add_option("--seed", est_seed, "Seed");

  bool skip_training = false;
  std::string verify_json;
  auto* verify = app.add_subcommand("verify", "Run the theory suite; exits nonzero on any failure");
  verify->add_flag("--skip-training", skip_training, "Skip the training-based bound check");
  verify->add_option("--json", verify_json, "Also write the report as JSON");

  std::string synth_spec = "adultlike", synth_out;
  std::size_t per_group = 5000;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset as CSV");
  synth->add_option("--spec", synth_spec, "'adultlike' or a synth spec JSON (file or inline)");
  synth->add_option("--per-group", per_group, "Rows per group for the preset")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Seed for the preset");
  synth->add_option("--out", synth_out, "Output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      json cfg = json::parse(read_file(run_config));
      run_opts.apply(cfg);
      char* summary = nullptr;
      const nf_status st =
          nf_run_benchmark(cfg.dump().c_str(), parent_dir(run_config).c_str(), run_opts.jobs_or_zero(), &summary);
      if (st != NF_OK) return report(st);
      print_summary(summary);
      nf_string_free(summary);
      return 0;
    }
    if (*sweep) {
      json base = json::parse(read_file(sweep_config));
      sweep_opts.apply(base);
      json req = {{"base", base}};
      if (!grid.empty()) req["grid"] = grid;
      if (!noisy_group.empty()) req["noisy_group"] = noisy_group;
      char* summary = nullptr;
      const nf_status st =
          nf_noise_sweep(req.dump().c_str(), parent_dir(sweep_config).c_str(), sweep_opts.jobs_or_zero(), &summary);
      if (st != NF_OK) return report(st);
      for (const auto& p : json::parse(summary)) {
        std::printf("eps = %g\n", p.at("eps").get<double>());
        print_summary(p.at("summary").dump());
      }
      nf_string_free(summary);
      return 0;
    }
    if (*estimate) {
      nf_dataset* ds = nullptr;
      nf_status st = nf_dataset_load_csv(est_data.c_str(), json_arg(est_schema).dump().c_str(), 1, &ds);
      if (st != NF_OK) return report(st);
      nf_estimate* est = nullptr;
      st = nf_estimate_noise(ds, est_folds, est_seed, &est);
      nf_dataset_free(ds);
      if (st != NF_OK) return report(st);
      char* text = nullptr;
      st = nf_estimate_to_json(est, &text);
      nf_estimate_free(est);
      if (st != NF_OK) return report(st);
      std::printf("%s\n", text);
      nf_string_free(text);
      return 0;
    }
    if (*verify) {
      int passed = 0;
      char* text = nullptr;
      const nf_status st = nf_verify_theory(skip_training ? 0 : 1, &passed, &text);
      if (st != NF_OK) return report(st);
      const json r = json::parse(text);
      for (const auto& c : r.at("checks"))
        std::printf("[%s] %-24s %8.3fs  %s\n", c.at("passed").get<bool>() ? "PASS" : "FAIL",
                    c.at("name").get<std::string>().c_str(), c.at("seconds").get<double>(),
                    c.at("detail").get<std::string>().c_str());
      if (!verify_json.empty()) {
        std::ofstream f(verify_json, std::ios::binary);
        f << r.dump(2) << "\n";
      }
      nf_string_free(text);
      return passed ? 0 : 1;
    }
    if (*synth) {
      json spec = synth_spec == "adultlike"
                      ? json{{"preset", "adultlike"}, {"per_group", per_group}, {"seed", synth_seed}}
                      : json_arg(synth_spec);
      nf_dataset* ds = nullptr;
      nf_status st = nf_dataset_synth(spec.dump().c_str(), &ds);
      if (st != NF_OK) return report(st);
      st = nf_dataset_write_csv(ds, synth_out.c_str());
      nf_dataset_free(ds);
      return report(st);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
