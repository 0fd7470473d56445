#pragma once

#include <cstdint>
#include <vector>

#include "noisefair/dataset.hpp"
#include "noisefair/rng.hpp"

namespace fixtures {

// Two Gaussian blobs per group in `dims` dimensions, label +1 centred at
// +sep/2 on every axis and -1 at -sep/2. Same shape for every group.
inline noisefair::Dataset blobs(std::size_t per_class, int groups, double sep, std::uint64_t seed, int dims = 2,
                                double pos_share = 0.5) {
  const noisefair::Philox rng(seed);
  std::vector<double> f;
  std::vector<int> y, g;
  std::uint64_t counter = 0;
  const std::size_t cols = static_cast<std::size_t>(dims) + 1;
  for (int z = 0; z < groups; ++z) {
    const auto n_pos = static_cast<std::size_t>(2.0 * per_class * pos_share);
    const std::size_t n = 2 * per_class;
    for (std::size_t i = 0; i < n; ++i) {
      const int label = i < n_pos ? noisefair::kPositive : noisefair::kNegative;
      f.push_back(1.0);
      for (int d = 0; d < dims; ++d) f.push_back(label * sep / 2.0 + rng.normal(99, counter++));
      y.push_back(label);
      g.push_back(z);
    }
  }
  std::vector<std::string> names;
  for (int z = 0; z < groups; ++z) names.push_back("g" + std::to_string(z));
  (void)cols;
  return noisefair::Dataset(std::move(f), cols, std::move(y), std::move(g), std::move(names));
}

}  // namespace fixtures
