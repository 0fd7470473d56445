#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace noisefair {

// Labels are +1 / -1 end to end.
inline constexpr int kPositive = 1;
inline constexpr int kNegative = -1;

// Per-feature affine standardization; column 0 (intercept) is never touched.
struct Standardizer {
  std::vector<double> mean;   // one entry per non-intercept feature
  std::vector<double> scale;  // 1.0 for constant columns

  bool empty() const { return mean.empty(); }
  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);
};

// Tabular data in (x, y, z) form. Rows of `features` start with the
// intercept 1. Immutable after construction; all invariants are checked
// by the constructor.
class Dataset {
 public:
  Dataset(std::vector<double> features, std::size_t cols, std::vector<int> labels, std::vector<int> groups,
          std::vector<std::string> group_names, std::vector<std::string> feature_names = {});

  std::size_t size() const { return labels_.size(); }
  std::size_t cols() const { return cols_; }
  std::size_t num_groups() const { return group_names_.size(); }

  std::span<const double> row(std::size_t i) const { return {features_.data() + i * cols_, cols_}; }
  const std::vector<double>& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<int>& groups() const { return groups_; }
  int label(std::size_t i) const { return labels_[i]; }
  int group(std::size_t i) const { return groups_[i]; }
  const std::vector<std::string>& group_names() const { return group_names_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const Standardizer& standardizer() const { return standardizer_; }

  std::size_t group_size(int z) const;
  // Count of rows in group z carrying label y.
  std::size_t count(int z, int y) const;

  Dataset with_labels(std::vector<int> labels) const;
  Dataset subset(std::span<const std::size_t> rows) const;

  // Fit standardization on this dataset and return the standardized copy.
  Dataset standardized() const;
  // Apply previously fitted statistics.
  Dataset standardized_with(const Standardizer& s) const;

  int group_id(const std::string& name) const;

 private:
  std::vector<double> features_;
  std::size_t cols_;
  std::vector<int> labels_;
  std::vector<int> groups_;
  std::vector<std::string> group_names_;
  std::vector<std::string> feature_names_;
  Standardizer standardizer_;
};

// Column roles for CSV ingestion.
struct Schema {
  std::string label_column;
  std::string positive_symbol;
  std::string group_column;
  std::vector<std::string> feature_columns;

  static Schema from_json(const nlohmann::json& j);
};

struct LoadOptions {
  // Standardize on the loaded rows. Pipelines that split first pass false
  // and standardize on their training split instead.
  bool standardize = true;
};

Dataset load_dataset(const std::string& path, const Schema& schema, LoadOptions opts = {});
Dataset parse_dataset(const std::string& csv_text, const Schema& schema, LoadOptions opts = {});

// RFC 4180 CSV reader. Returns records including the header.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

void write_csv(const Dataset& ds, const std::string& path, const std::string& label_column = "label",
               const std::string& group_column = "group");

struct GroupNoise {
  double eps_plus = 0.0;   // P(noisy = -1 | y = +1, z)
  double eps_minus = 0.0;  // P(noisy = +1 | y = -1, z)
  double delta() const { return 1.0 - eps_plus - eps_minus; }
};

// Group-dependent flip rates indexed by dense group id.
class NoiseSpec {
 public:
  NoiseSpec() = default;
  explicit NoiseSpec(std::vector<GroupNoise> rates);

  std::size_t num_groups() const { return rates_.size(); }
  const GroupNoise& operator[](std::size_t z) const { return rates_[z]; }
  const std::vector<GroupNoise>& rates() const { return rates_; }

  // Keys are group display names, resolved against `group_names`.
  static NoiseSpec from_json(const nlohmann::json& j, const std::vector<std::string>& group_names);
  nlohmann::json to_json(const std::vector<std::string>& group_names) const;

 private:
  std::vector<GroupNoise> rates_;
};

struct SplitConfig {
  double test_fraction = 0.2;
  double validation_fraction = 0.0;
  std::uint64_t seed = 0;
};

struct Split {
  Dataset train;
  std::optional<Dataset> validation;  // absent when validation_fraction == 0
  Dataset test;
  std::vector<std::size_t> train_rows, validation_rows, test_rows;
};

// Stratified by (group, label); rows keep their input order within each part.
Split split(const Dataset& ds, const SplitConfig& cfg);

Dataset inject_noise(const Dataset& ds, const NoiseSpec& spec, std::uint64_t seed);
// Same, but row i draws from stream position stream_index[i].
Dataset inject_noise(const Dataset& ds, const NoiseSpec& spec, std::uint64_t seed,
                     std::span<const std::uint64_t> stream_index);

struct FlipCounts {
  std::size_t positives = 0, positives_flipped = 0;
  std::size_t negatives = 0, negatives_flipped = 0;
  double eps_plus() const { return positives ? double(positives_flipped) / double(positives) : 0.0; }
  double eps_minus() const { return negatives ? double(negatives_flipped) / double(negatives) : 0.0; }
};

std::vector<FlipCounts> empirical_flip_rates(const Dataset& clean, const Dataset& noisy);

}  // namespace noisefair
