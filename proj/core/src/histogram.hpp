#pragma once

// Internal split-search machinery shared by best_split and grow_tree.

#include <optional>
#include <span>
#include <vector>

#include "mapseg/trees.hpp"

namespace mapseg::detail {

// gini: first = positives, second = rows. grad: first = G, second = H.
struct BinStats {
  double first = 0.0;
  double second = 0.0;
  double count = 0.0;

  BinStats& operator+=(const BinStats& o) noexcept {
    first += o.first;
    second += o.second;
    count += o.count;
    return *this;
  }
  BinStats& operator-=(const BinStats& o) noexcept {
    first -= o.first;
    second -= o.second;
    count -= o.count;
    return *this;
  }
};

class Histogram {
 public:
  Histogram() = default;
  explicit Histogram(const BinMap& map);

  std::span<BinStats> feature(std::size_t f) noexcept {
    return std::span<BinStats>(bins_).subspan(offsets_[f], offsets_[f + 1] - offsets_[f]);
  }
  std::span<const BinStats> feature(std::size_t f) const noexcept {
    return std::span<const BinStats>(bins_).subspan(offsets_[f], offsets_[f + 1] - offsets_[f]);
  }
  void subtract(const Histogram& other) noexcept;

 private:
  std::vector<BinStats> bins_;
  std::vector<std::size_t> offsets_;
};

BinStats row_stats(std::uint32_t row, const NodeTargets& targets, SplitCriterion::Kind kind) noexcept;
BinStats total_stats(std::span<const std::uint32_t> rows, const NodeTargets& targets,
                     SplitCriterion::Kind kind) noexcept;

Histogram build_histogram(const BinnedMatrix& data, std::span<const std::uint32_t> rows,
                          const NodeTargets& targets, SplitCriterion::Kind kind);

// Gain of sending `left` one way and total - left the other, or nothing
// when the split violates a child constraint or does not improve.
std::optional<double> split_gain(const BinStats& left, const BinStats& total, const SplitCriterion& criterion) noexcept;

// True when `gain` beats `best` beyond rounding noise; earlier candidates
// win near-ties so scan order implements the tie rule.
bool improves(double gain, double best) noexcept;

std::optional<Split> evaluate_histogram(const Histogram& hist, const BinStats& total, const BinMap& map,
                                        const SplitCriterion& criterion, std::span<const int> features);

double leaf_value(const BinStats& total, const SplitCriterion& criterion) noexcept;

}  // namespace mapseg::detail
