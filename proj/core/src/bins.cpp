#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mapseg/error.hpp"
#include "mapseg/trees.hpp"

namespace mapseg {

BinMap::BinMap(std::vector<std::vector<double>> thresholds) : thresholds_(std::move(thresholds)) {
  for (const auto& t : thresholds_) {
    if (t.size() >= static_cast<std::size_t>(kMaxBins)) throw ConfigError("too many bin thresholds");
    if (std::adjacent_find(t.begin(), t.end(), std::greater_equal<>()) != t.end()) {
      throw ConfigError("bin thresholds must be strictly increasing");
    }
  }
}

std::uint8_t BinMap::bin(std::size_t feature, float value) const noexcept {
  const auto& t = thresholds_[feature];
  return static_cast<std::uint8_t>(std::lower_bound(t.begin(), t.end(), static_cast<double>(value)) - t.begin());
}

BinMap build_bins(const FeatureMatrix& matrix, int max_bins) {
  if (max_bins < 2 || max_bins > kMaxBins) throw ConfigError("max_bins must lie in [2, 256]");
  if (matrix.num_rows() == 0) throw DataError("cannot bin an empty matrix");
  const std::size_t n = matrix.num_rows();
  std::vector<std::vector<double>> thresholds(matrix.num_features());
  std::vector<float> sorted;
  for (std::size_t f = 0; f < matrix.num_features(); ++f) {
    sorted = matrix.column(f);
    std::sort(sorted.begin(), sorted.end());

    // Distinct values and the number of rows at or below each.
    std::vector<float> distinct;
    std::vector<std::size_t> cumulative;
    for (std::size_t i = 0; i < n; ++i) {
      if (distinct.empty() || sorted[i] != distinct.back()) {
        distinct.push_back(sorted[i]);
        cumulative.push_back(0);
      }
      cumulative.back() = i + 1;
    }

    auto midpoint = [&](std::size_t i) {
      return 0.5 * (static_cast<double>(distinct[i]) + static_cast<double>(distinct[i + 1]));
    };
    auto& cuts = thresholds[f];
    if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
      for (std::size_t i = 0; i + 1 < distinct.size(); ++i) cuts.push_back(midpoint(i));
      continue;
    }
    // Equal-frequency: cut after the first distinct value whose cumulative
    // count reaches the next multiple of n / max_bins.
    const double per_bin = static_cast<double>(n) / max_bins;
    double next_target = per_bin;
    for (std::size_t i = 0; i + 1 < distinct.size() && cuts.size() + 1 < static_cast<std::size_t>(max_bins); ++i) {
      const double reached = static_cast<double>(cumulative[i]);
      if (reached + 1e-9 >= next_target) {
        cuts.push_back(midpoint(i));
        next_target = (std::floor(reached / per_bin + 1e-9) + 1.0) * per_bin;
      }
    }
  }
  return BinMap(std::move(thresholds));
}

BinnedMatrix bin_matrix(const FeatureMatrix& matrix, BinMap map) {
  if (map.num_features() != matrix.num_features()) throw DataError("bin map does not match matrix width");
  BinnedMatrix out;
  out.rows = matrix.num_rows();
  out.features = matrix.num_features();
  out.bins.resize(out.rows * out.features);
  for (std::size_t f = 0; f < out.features; ++f) {
    for (std::size_t r = 0; r < out.rows; ++r) out.bins[f * out.rows + r] = map.bin(f, matrix.at(r, f));
  }
  out.map = std::move(map);
  return out;
}

GradientPair grad_hess(double p, int label) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("probability must lie in (0, 1)");
  return {p - label, p * (1.0 - p)};
}

}  // namespace mapseg
