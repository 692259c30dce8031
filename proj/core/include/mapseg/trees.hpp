#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mapseg/design_matrix.hpp"

namespace mapseg {

inline constexpr int kMaxBins = 256;

// Per-feature ascending split thresholds. A value v falls in bin b when
// thresholds[b-1] < v <= thresholds[b]; "go left iff v <= threshold" then
// equals "go left iff bin <= b".
class BinMap {
 public:
  BinMap() = default;
  explicit BinMap(std::vector<std::vector<double>> thresholds);

  std::size_t num_features() const noexcept { return thresholds_.size(); }
  int num_bins(std::size_t feature) const noexcept {
    return static_cast<int>(thresholds_[feature].size()) + 1;
  }
  const std::vector<double>& thresholds(std::size_t feature) const noexcept { return thresholds_[feature]; }
  std::uint8_t bin(std::size_t feature, float value) const noexcept;

 private:
  std::vector<std::vector<double>> thresholds_;
};

// One bin per distinct value when a feature has at most max_bins of them,
// otherwise equal-frequency cuts. Thresholds are midpoints between the
// neighbouring values on either side of a cut.
BinMap build_bins(const FeatureMatrix& matrix, int max_bins = kMaxBins);

// Feature-major bin indices of a matrix under a bin map.
struct BinnedMatrix {
  std::size_t rows = 0;
  std::size_t features = 0;
  std::vector<std::uint8_t> bins;  // bins[f * rows + r]
  BinMap map;

  std::uint8_t at(std::size_t row, std::size_t feature) const noexcept { return bins[feature * rows + row]; }
  std::span<const std::uint8_t> column(std::size_t feature) const noexcept {
    return std::span<const std::uint8_t>(bins).subspan(feature * rows, rows);
  }
};

BinnedMatrix bin_matrix(const FeatureMatrix& matrix, BinMap map);

struct GradientPair {
  double grad = 0.0;
  double hess = 0.0;
};

// Binary log-loss derivatives at probability p: g = p - y, h = p (1 - p).
// Throws std::domain_error unless 0 < p < 1.
GradientPair grad_hess(double p, int label);

struct SplitCriterion {
  enum class Kind { kGini, kGradGain };
  Kind kind = Kind::kGini;
  double lambda = 0.0;            // L2 on leaf weights
  double alpha = 0.0;             // L1 on leaf weights
  double gamma = 0.0;             // minimum gain to split
  double min_child_weight = 0.0;  // minimum hessian mass per child

  static SplitCriterion gini() { return {}; }
  static SplitCriterion grad_gain(double lambda, double alpha, double gamma, double min_child_weight) {
    return {Kind::kGradGain, lambda, alpha, gamma, min_child_weight};
  }
  // Throws ConfigError on negative parameters.
  void validate() const;
};

// Per-row training targets: labels for gini, gradients for grad_gain.
struct NodeTargets {
  std::span<const std::uint8_t> labels;
  std::span<const double> grad;
  std::span<const double> hess;
};

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  int bin = -1;  // last bin sent left; -1 for raw-value splits
};

// Best bin-boundary split over the candidate features. Gini gain is the
// impurity decrease; grad gain is
//   1/2 [S(G_L)^2/(H_L+l) + S(G_R)^2/(H_R+l) - S(G)^2/(H+l)] - gamma
// with S the L1 soft threshold. Equal gains resolve to the lower feature
// index, then the lower threshold. Returns nothing when the best gain is not
// positive or no split leaves both children non-empty (and above
// min_child_weight for grad gain).
std::optional<Split> best_split(const BinnedMatrix& data, std::span<const std::uint32_t> rows,
                                const NodeTargets& targets, const SplitCriterion& criterion,
                                std::span<const int> features);

// Same contract as best_split, scanning every midpoint between consecutive
// distinct raw values after sorting. Used as a test oracle.
std::optional<Split> exhaustive_split_oracle(const FeatureMatrix& matrix, std::span<const std::uint32_t> rows,
                                             const NodeTargets& targets, const SplitCriterion& criterion,
                                             std::span<const int> features);

double gini_leaf_value(double positives, double count);
double grad_leaf_value(double grad_sum, double hess_sum, double lambda, double alpha);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output; node statistic on internal nodes
  double gain = 0.0;
  double cover = 0.0;  // training rows reaching the node

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class Tree {
 public:
  Tree() = default;
  explicit Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  double predict(std::span<const float> row) const noexcept;
  int num_leaves() const noexcept;
  int depth() const noexcept;

  friend bool operator==(const Tree&, const Tree&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

struct Growth {
  enum class Kind { kLevelWise, kLeafWise };
  Kind kind = Kind::kLevelWise;
  int max_depth = 0;   // <= 0: unlimited
  int num_leaves = 0;  // leaf-wise cap

  static Growth level_wise(int max_depth) { return {Kind::kLevelWise, max_depth, 0}; }
  static Growth leaf_wise(int num_leaves, int max_depth) { return {Kind::kLeafWise, max_depth, num_leaves}; }
};

struct GrowOptions {
  SplitCriterion criterion;
  Growth growth;
  std::vector<int> features;    // candidate features; empty means all
  int features_per_split = 0;   // > 0: random subset drawn at every node
  std::uint64_t seed = 0;
};

// Level-wise growth splits every splittable node until max_depth. Leaf-wise
// growth repeatedly splits the open leaf with the highest gain (lowest node
// id on ties) until num_leaves is reached or no positive gain remains.
Tree grow_tree(const BinnedMatrix& data, std::span<const std::uint32_t> rows, const NodeTargets& targets,
               const GrowOptions& options);

}  // namespace mapseg
