#include <algorithm>
#include <cmath>
#include <numeric>

#include "histogram.hpp"
#include "mapseg/error.hpp"
#include "mapseg/trees.hpp"

namespace mapseg {

void SplitCriterion::validate() const {
  if (lambda < 0.0 || alpha < 0.0 || gamma < 0.0 || min_child_weight < 0.0) {
    throw ConfigError("split criterion parameters must be non-negative");
  }
}

double gini_leaf_value(double positives, double count) { return count > 0.0 ? positives / count : 0.0; }

double grad_leaf_value(double grad_sum, double hess_sum, double lambda, double alpha) {
  const double denom = hess_sum + lambda;
  if (denom <= 0.0) return 0.0;
  const double shrunk = std::max(0.0, std::abs(grad_sum) - alpha);
  return -std::copysign(shrunk, grad_sum) / denom;
}

namespace detail {

namespace {

double gini_impurity(double positives, double count) noexcept {
  if (count <= 0.0) return 0.0;
  const double p = positives / count;
  return 2.0 * p * (1.0 - p);
}

double grad_score(double g, double h, const SplitCriterion& c) noexcept {
  const double denom = h + c.lambda;
  if (denom <= 0.0) return 0.0;
  const double shrunk = std::max(0.0, std::abs(g) - c.alpha);
  return shrunk * shrunk / denom;
}

constexpr double kRelativeEps = 1e-12;

}  // namespace

Histogram::Histogram(const BinMap& map) {
  offsets_.push_back(0);
  for (std::size_t f = 0; f < map.num_features(); ++f) {
    offsets_.push_back(offsets_.back() + static_cast<std::size_t>(map.num_bins(f)));
  }
  bins_.assign(offsets_.back(), BinStats{});
}

void Histogram::subtract(const Histogram& other) noexcept {
  for (std::size_t i = 0; i < bins_.size(); ++i) bins_[i] -= other.bins_[i];
}

BinStats row_stats(std::uint32_t row, const NodeTargets& targets, SplitCriterion::Kind kind) noexcept {
  if (kind == SplitCriterion::Kind::kGini) return {static_cast<double>(targets.labels[row]), 1.0, 1.0};
  return {targets.grad[row], targets.hess[row], 1.0};
}

BinStats total_stats(std::span<const std::uint32_t> rows, const NodeTargets& targets,
                     SplitCriterion::Kind kind) noexcept {
  BinStats total;
  for (auto r : rows) total += row_stats(r, targets, kind);
  return total;
}

Histogram build_histogram(const BinnedMatrix& data, std::span<const std::uint32_t> rows,
                          const NodeTargets& targets, SplitCriterion::Kind kind) {
  Histogram hist(data.map);
  std::vector<BinStats> stats(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) stats[i] = row_stats(rows[i], targets, kind);
  for (std::size_t f = 0; f < data.features; ++f) {
    auto bins = hist.feature(f);
    const auto column = data.column(f);
    for (std::size_t i = 0; i < rows.size(); ++i) bins[column[rows[i]]] += stats[i];
  }
  return hist;
}

std::optional<double> split_gain(const BinStats& left, const BinStats& total,
                                 const SplitCriterion& criterion) noexcept {
  BinStats right = total;
  right -= left;
  if (left.count < 1.0 || right.count < 1.0) return std::nullopt;
  double gain = 0.0;
  double scale = 1.0;
  if (criterion.kind == SplitCriterion::Kind::kGini) {
    const double n = total.count;
    gain = gini_impurity(total.first, total.second) - left.second / n * gini_impurity(left.first, left.second) -
           right.second / n * gini_impurity(right.first, right.second);
  } else {
    if (left.second < criterion.min_child_weight || right.second < criterion.min_child_weight) return std::nullopt;
    const double sl = grad_score(left.first, left.second, criterion);
    const double sr = grad_score(right.first, right.second, criterion);
    const double sp = grad_score(total.first, total.second, criterion);
    gain = 0.5 * (sl + sr - sp) - criterion.gamma;
    scale = std::max(1.0, sl + sr + sp);
  }
  if (!(gain > kRelativeEps * scale)) return std::nullopt;
  return gain;
}

bool improves(double gain, double best) noexcept {
  return gain > best + kRelativeEps * std::max(1.0, std::abs(best));
}

std::optional<Split> evaluate_histogram(const Histogram& hist, const BinStats& total, const BinMap& map,
                                        const SplitCriterion& criterion, std::span<const int> features) {
  std::vector<int> order(features.begin(), features.end());
  std::sort(order.begin(), order.end());
  std::optional<Split> best;
  for (int f : order) {
    const auto bins = hist.feature(static_cast<std::size_t>(f));
    const auto& thresholds = map.thresholds(static_cast<std::size_t>(f));
    BinStats left;
    for (std::size_t b = 0; b + 1 < bins.size(); ++b) {
      left += bins[b];
      if (bins[b].count == 0.0 && left.count == 0.0) continue;
      const auto gain = split_gain(left, total, criterion);
      if (gain && (!best || improves(*gain, best->gain))) {
        best = Split{f, thresholds[b], *gain, static_cast<int>(b)};
      }
    }
  }
  return best;
}

double leaf_value(const BinStats& total, const SplitCriterion& criterion) noexcept {
  if (criterion.kind == SplitCriterion::Kind::kGini) return gini_leaf_value(total.first, total.second);
  return grad_leaf_value(total.first, total.second, criterion.lambda, criterion.alpha);
}

}  // namespace detail

std::optional<Split> best_split(const BinnedMatrix& data, std::span<const std::uint32_t> rows,
                                const NodeTargets& targets, const SplitCriterion& criterion,
                                std::span<const int> features) {
  if (rows.size() < 2 || features.empty()) return std::nullopt;
  const auto hist = detail::build_histogram(data, rows, targets, criterion.kind);
  const auto total = detail::total_stats(rows, targets, criterion.kind);
  return detail::evaluate_histogram(hist, total, data.map, criterion, features);
}

std::optional<Split> exhaustive_split_oracle(const FeatureMatrix& matrix, std::span<const std::uint32_t> rows,
                                             const NodeTargets& targets, const SplitCriterion& criterion,
                                             std::span<const int> features) {
  if (rows.size() < 2 || features.empty()) return std::nullopt;
  const auto total = detail::total_stats(rows, targets, criterion.kind);
  std::vector<int> order(features.begin(), features.end());
  std::sort(order.begin(), order.end());
  std::optional<Split> best;
  std::vector<std::uint32_t> sorted(rows.begin(), rows.end());
  for (int f : order) {
    const auto feature = static_cast<std::size_t>(f);
    std::stable_sort(sorted.begin(), sorted.end(), [&](std::uint32_t a, std::uint32_t b) {
      return matrix.at(a, feature) < matrix.at(b, feature);
    });
    detail::BinStats left;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      left += detail::row_stats(sorted[i], targets, criterion.kind);
      const float here = matrix.at(sorted[i], feature);
      const float next = matrix.at(sorted[i + 1], feature);
      if (here == next) continue;
      const auto gain = detail::split_gain(left, total, criterion);
      if (gain && (!best || detail::improves(*gain, best->gain))) {
        const double threshold = 0.5 * (static_cast<double>(here) + static_cast<double>(next));
        best = Split{f, threshold, *gain, -1};
      }
    }
  }
  return best;
}

}  // namespace mapseg
