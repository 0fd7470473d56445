#include "noisefair/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "noisefair/error.hpp"
#include "noisefair/rng.hpp"

namespace noisefair {

using nlohmann::json;

json Standardizer::to_json() const { return json{{"mean", mean}, {"scale", scale}}; }

Standardizer Standardizer::from_json(const json& j) {
  Standardizer s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  require(s.mean.size() == s.scale.size(), "standardizer: mean/scale length mismatch");
  return s;
}

Dataset::Dataset(std::vector<double> features, std::size_t cols, std::vector<int> labels, std::vector<int> groups,
                 std::vector<std::string> group_names, std::vector<std::string> feature_names)
    : features_(std::move(features)),
      cols_(cols),
      labels_(std::move(labels)),
      groups_(std::move(groups)),
      group_names_(std::move(group_names)),
      feature_names_(std::move(feature_names)) {
  const std::size_t n = labels_.size();
  require(n >= 1, "dataset: needs at least one row");
  require(cols_ >= 1, "dataset: needs the intercept column");
  require(groups_.size() == n && features_.size() == n * cols_, "dataset: features, labels and groups differ in length");
  require(!group_names_.empty(), "dataset: no groups");
  if (feature_names_.empty()) {
    feature_names_.emplace_back("intercept");
    for (std::size_t c = 1; c < cols_; ++c) feature_names_.push_back("x" + std::to_string(c));
  }
  require(feature_names_.size() == cols_, "dataset: feature name count does not match columns");
  const int m = static_cast<int>(group_names_.size());
  std::vector<bool> seen(group_names_.size(), false);
  for (std::size_t i = 0; i < n; ++i) {
    require(labels_[i] == kPositive || labels_[i] == kNegative,
            "dataset: label at row " + std::to_string(i) + " is not +1/-1");
    require(groups_[i] >= 0 && groups_[i] < m, "dataset: group id out of range at row " + std::to_string(i));
    seen[static_cast<std::size_t>(groups_[i])] = true;
    require(features_[i * cols_] == 1.0, "dataset: intercept column must be 1 at row " + std::to_string(i));
  }
  for (std::size_t z = 0; z < seen.size(); ++z)
    require(seen[z], "dataset: group '" + group_names_[z] + "' has no rows");
}

std::size_t Dataset::group_size(int z) const {
  return static_cast<std::size_t>(std::count(groups_.begin(), groups_.end(), z));
}

std::size_t Dataset::count(int z, int y) const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < size(); ++i) c += (groups_[i] == z && labels_[i] == y);
  return c;
}

Dataset Dataset::with_labels(std::vector<int> labels) const {
  require(labels.size() == size(), "with_labels: length mismatch");
  Dataset out(features_, cols_, std::move(labels), groups_, group_names_, feature_names_);
  out.standardizer_ = standardizer_;
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<double> f;
  f.reserve(rows.size() * cols_);
  std::vector<int> y, g;
  y.reserve(rows.size());
  g.reserve(rows.size());
  for (std::size_t r : rows) {
    require(r < size(), "subset: row index out of range");
    auto x = row(r);
    f.insert(f.end(), x.begin(), x.end());
    y.push_back(labels_[r]);
    g.push_back(groups_[r]);
  }
  Dataset out(std::move(f), cols_, std::move(y), std::move(g), group_names_, feature_names_);
  out.standardizer_ = standardizer_;
  return out;
}

Dataset Dataset::standardized() const {
  Standardizer s;
  const double n = static_cast<double>(size());
  for (std::size_t c = 1; c < cols_; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < size(); ++i) mean += features_[i * cols_ + c];
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      const double d = features_[i * cols_ + c] - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / n);
    // Constant columns are left as-is.
    if (sd > 1e-12) {
      s.mean.push_back(mean);
      s.scale.push_back(sd);
    } else {
      s.mean.push_back(0.0);
      s.scale.push_back(1.0);
    }
  }
  return standardized_with(s);
}

Dataset Dataset::standardized_with(const Standardizer& s) const {
  require(s.mean.size() + 1 == cols_, "standardize: statistics cover " + std::to_string(s.mean.size()) +
                                          " features, dataset has " + std::to_string(cols_ - 1));
  std::vector<double> f = features_;
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t c = 1; c < cols_; ++c) f[i * cols_ + c] = (f[i * cols_ + c] - s.mean[c - 1]) / s.scale[c - 1];
  Dataset out(std::move(f), cols_, labels_, groups_, group_names_, feature_names_);
  out.standardizer_ = s;
  return out;
}

int Dataset::group_id(const std::string& name) const {
  auto it = std::find(group_names_.begin(), group_names_.end(), name);
  if (it == group_names_.end()) fail(ErrorCode::InvalidArgument, "unknown group '" + name + "'");
  return static_cast<int>(it - group_names_.begin());
}

Schema Schema::from_json(const json& j) {
  Schema s;
  s.label_column = j.at("label_column").get<std::string>();
  s.positive_symbol = j.at("positive_symbol").get<std::string>();
  s.group_column = j.at("group_column").get<std::string>();
  s.feature_columns = j.at("feature_columns").get<std::vector<std::string>>();
  require(!s.feature_columns.empty(), "schema: at least one feature column is required");
  return s;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        quoted = false;
      } else {
        field.push_back(c);
      }
      ++i;
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
    } else {
      field.push_back(c);
      field_started = true;
    }
    ++i;
  }
  if (quoted) fail(ErrorCode::Parse, "csv: unterminated quoted field");
  if (field_started || !field.empty() || !record.empty()) end_record();
  // Drop blank lines.
  std::erase_if(records, [](const auto& r) { return r.size() == 1 && r[0].empty(); });
  return records;
}

namespace {

std::string cell_ref(std::size_t row, const std::string& column) {
  return "row " + std::to_string(row) + ", column '" + column + "'";
}

}  // namespace

Dataset parse_dataset(const std::string& csv_text, const Schema& schema, LoadOptions opts) {
  const auto records = parse_csv(csv_text);
  if (records.empty()) fail(ErrorCode::Parse, "csv: empty file");
  if (records.size() == 1) fail(ErrorCode::Parse, "csv: header row but no data rows");
  const auto& header = records[0];
  auto column_of = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail(ErrorCode::Parse, "csv: missing column '" + name + "' in header");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t label_col = column_of(schema.label_column);
  const std::size_t group_col = column_of(schema.group_column);
  std::vector<std::size_t> feature_cols;
  for (const auto& f : schema.feature_columns) feature_cols.push_back(column_of(f));

  const std::size_t cols = feature_cols.size() + 1;
  std::vector<double> features;
  std::vector<int> labels, groups;
  std::vector<std::string> group_names, label_symbols;
  std::map<std::string, int> group_ids;
  // Row numbers are 1-based data rows (the header is row 0).
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size())
      fail(ErrorCode::Parse, "csv: row " + std::to_string(r) + " has " + std::to_string(rec.size()) +
                                 " fields, header has " + std::to_string(header.size()));
    const std::string& sym = rec[label_col];
    if (sym.empty()) fail(ErrorCode::Parse, "csv: missing label at " + cell_ref(r, schema.label_column));
    if (std::find(label_symbols.begin(), label_symbols.end(), sym) == label_symbols.end()) {
      label_symbols.push_back(sym);
      if (label_symbols.size() > 2)
        fail(ErrorCode::Parse, "csv: more than two label symbols; third symbol '" + sym + "' at " +
                                   cell_ref(r, schema.label_column));
    }
    labels.push_back(sym == schema.positive_symbol ? kPositive : kNegative);

    const std::string& g = rec[group_col];
    if (g.empty()) fail(ErrorCode::Parse, "csv: missing group at " + cell_ref(r, schema.group_column));
    auto [it, inserted] = group_ids.try_emplace(g, static_cast<int>(group_names.size()));
    if (inserted) group_names.push_back(g);
    groups.push_back(it->second);

    features.push_back(1.0);
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const std::string& cell = rec[feature_cols[k]];
      double v = 0.0;
      std::size_t used = 0;
      bool ok = !cell.empty();
      if (ok) {
        try {
          v = std::stod(cell, &used);
        } catch (const std::exception&) {
          ok = false;
        }
      }
      if (!ok || used != cell.size() || !std::isfinite(v))
        fail(ErrorCode::Parse, "csv: non-numeric feature '" + cell + "' at " + cell_ref(r, schema.feature_columns[k]));
      features.push_back(v);
    }
  }
  std::vector<std::string> names{"intercept"};
  names.insert(names.end(), schema.feature_columns.begin(), schema.feature_columns.end());
  Dataset ds(std::move(features), cols, std::move(labels), std::move(groups), std::move(group_names),
             std::move(names));
  return opts.standardize ? ds.standardized() : ds;
}

Dataset load_dataset(const std::string& path, const Schema& schema, LoadOptions opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), schema, opts);
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

void write_csv(const Dataset& ds, const std::string& path, const std::string& label_column,
               const std::string& group_column) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path + "'");
  for (std::size_t c = 1; c < ds.cols(); ++c) out << csv_escape(ds.feature_names()[c]) << ',';
  out << csv_escape(group_column) << ',' << csv_escape(label_column) << '\n';
  char buf[32];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto x = ds.row(i);
    for (std::size_t c = 1; c < ds.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", x[c]);
      out << buf << ',';
    }
    out << csv_escape(ds.group_names()[static_cast<std::size_t>(ds.group(i))]) << ',' << ds.label(i) << '\n';
  }
}

NoiseSpec::NoiseSpec(std::vector<GroupNoise> rates) : rates_(std::move(rates)) {
  for (std::size_t z = 0; z < rates_.size(); ++z) {
    const auto& r = rates_[z];
    require(r.eps_plus >= 0.0 && r.eps_plus < 1.0 && r.eps_minus >= 0.0 && r.eps_minus < 1.0,
            "noise spec: rates for group " + std::to_string(z) + " must lie in [0, 1)");
    require(r.eps_plus + r.eps_minus < 1.0,
            "noise spec: eps_plus + eps_minus must be < 1 for group " + std::to_string(z));
  }
}

NoiseSpec NoiseSpec::from_json(const json& j, const std::vector<std::string>& group_names) {
  require(j.is_object(), "noise spec: expected an object keyed by group name");
  std::vector<GroupNoise> rates(group_names.size());
  std::vector<bool> covered(group_names.size(), false);
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto pos = std::find(group_names.begin(), group_names.end(), it.key());
    require(pos != group_names.end(), "noise spec: unknown group '" + it.key() + "'");
    const auto z = static_cast<std::size_t>(pos - group_names.begin());
    rates[z] = {it.value().at("eps_plus").get<double>(), it.value().at("eps_minus").get<double>()};
    covered[z] = true;
  }
  for (std::size_t z = 0; z < covered.size(); ++z)
    require(covered[z], "noise spec: missing group '" + group_names[z] + "'");
  return NoiseSpec(std::move(rates));
}

json NoiseSpec::to_json(const std::vector<std::string>& group_names) const {
  json j = json::object();
  for (std::size_t z = 0; z < rates_.size(); ++z)
    j[group_names.at(z)] = {{"eps_plus", rates_[z].eps_plus}, {"eps_minus", rates_[z].eps_minus}};
  return j;
}

Split split(const Dataset& ds, const SplitConfig& cfg) {
  require(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0, "split: test_fraction must lie in (0, 1)");
  require(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0,
          "split: validation_fraction must lie in [0, 1)");
  require(cfg.test_fraction + cfg.validation_fraction < 1.0, "split: test + validation fractions must be < 1");
  const std::size_t parts = cfg.validation_fraction > 0.0 ? 3 : 2;
  const Philox rng(cfg.seed);

  Split out{ds, std::nullopt, ds, {}, {}, {}};
  std::vector<int> assign(ds.size(), 0);  // 0 train, 1 validation, 2 test
  const int m = static_cast<int>(ds.num_groups());
  for (int z = 0; z < m; ++z) {
    for (int y : {kPositive, kNegative}) {
      std::vector<std::size_t> stratum;
      for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds.group(i) == z && ds.label(i) == y) stratum.push_back(i);
      if (stratum.empty()) continue;
      const std::size_t s = stratum.size();
      if (s < parts)
        fail(ErrorCode::Stratification, "split: stratum (group '" + ds.group_names()[static_cast<std::size_t>(z)] +
                                            "', label " + std::to_string(y) + ") has " + std::to_string(s) +
                                            " examples, fewer than the " + std::to_string(parts) +
                                            " partitions requested");
      // Each requested partition keeps at least one example of every stratum.
      auto share = [&](double frac) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(static_cast<double>(s) * frac + 0.5)));
      };
      std::size_t n_test = share(cfg.test_fraction);
      std::size_t n_val = parts == 3 ? share(cfg.validation_fraction) : 0;
      while (n_test + n_val > s - 1) {
        if (n_val > 1 && n_val >= n_test) --n_val;
        else --n_test;
      }
      shuffle(stratum, rng, streams::kSplit, static_cast<std::uint64_t>(z) * 2 + (y == kPositive ? 0 : 1));
      for (std::size_t k = 0; k < n_test; ++k) assign[stratum[k]] = 2;
      for (std::size_t k = n_test; k < n_test + n_val; ++k) assign[stratum[k]] = 1;
    }
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (assign[i] == 0) out.train_rows.push_back(i);
    else if (assign[i] == 1) out.validation_rows.push_back(i);
    else out.test_rows.push_back(i);
  }
  out.train = ds.subset(out.train_rows);
  out.test = ds.subset(out.test_rows);
  if (!out.validation_rows.empty()) out.validation = ds.subset(out.validation_rows);
  return out;
}

Dataset inject_noise(const Dataset& ds, const NoiseSpec& spec, std::uint64_t seed,
                     std::span<const std::uint64_t> stream_index) {
  require(stream_index.size() == ds.size(), "inject_noise: stream index length mismatch");
  if (spec.num_groups() < ds.num_groups())
    fail(ErrorCode::InvalidArgument, "inject_noise: noise spec has no rates for group '" +
                                         ds.group_names()[spec.num_groups()] + "'");
  const Philox rng(seed);
  std::vector<int> labels = ds.labels();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& r = spec[static_cast<std::size_t>(ds.group(i))];
    const double eps = labels[i] == kPositive ? r.eps_plus : r.eps_minus;
    if (rng.uniform(streams::kNoise, stream_index[i]) < eps) labels[i] = -labels[i];
  }
  return ds.with_labels(std::move(labels));
}

Dataset inject_noise(const Dataset& ds, const NoiseSpec& spec, std::uint64_t seed) {
  std::vector<std::uint64_t> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return inject_noise(ds, spec, seed, idx);
}

std::vector<FlipCounts> empirical_flip_rates(const Dataset& clean, const Dataset& noisy) {
  if (clean.size() != noisy.size() || clean.cols() != noisy.cols() || clean.num_groups() != noisy.num_groups() ||
      clean.groups() != noisy.groups() || clean.features() != noisy.features())
    fail(ErrorCode::InvalidArgument, "empirical_flip_rates: clean and noisy datasets differ in shape");
  std::vector<FlipCounts> out(clean.num_groups());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    auto& c = out[static_cast<std::size_t>(clean.group(i))];
    const bool flipped = clean.label(i) != noisy.label(i);
    if (clean.label(i) == kPositive) {
      ++c.positives;
      c.positives_flipped += flipped;
    } else {
      ++c.negatives;
      c.negatives_flipped += flipped;
    }
  }
  return out;
}

}  // namespace noisefair
