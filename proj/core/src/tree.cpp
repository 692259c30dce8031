#include <algorithm>
#include <numeric>
#include <random>

#include "histogram.hpp"
#include "mapseg/error.hpp"
#include "mapseg/trees.hpp"

namespace mapseg {

double Tree::predict(std::span<const float> row) const noexcept {
  int id = 0;
  while (!nodes_[static_cast<std::size_t>(id)].is_leaf()) {
    const auto& node = nodes_[static_cast<std::size_t>(id)];
    id = static_cast<double>(row[static_cast<std::size_t>(node.feature)]) <= node.threshold ? node.left : node.right;
  }
  return nodes_[static_cast<std::size_t>(id)].value;
}

int Tree::num_leaves() const noexcept {
  return static_cast<int>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int Tree::depth() const noexcept {
  if (nodes_.empty()) return 0;
  std::vector<int> depth(nodes_.size(), 0);
  int deepest = 0;
  // Children are always created after their parent.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.is_leaf()) continue;
    depth[static_cast<std::size_t>(n.left)] = depth[i] + 1;
    depth[static_cast<std::size_t>(n.right)] = depth[i] + 1;
    deepest = std::max(deepest, depth[i] + 1);
  }
  return deepest;
}

namespace {

struct OpenNode {
  int id = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  int depth = 0;
  detail::Histogram hist;
  detail::BinStats total;
  std::optional<Split> split;
};

class TreeGrower {
 public:
  TreeGrower(const BinnedMatrix& data, std::span<const std::uint32_t> rows, const NodeTargets& targets,
             const GrowOptions& options)
      : data_(data), targets_(targets), options_(options), order_(rows.begin(), rows.end()), rng_(options.seed) {
    if (options.features.empty()) {
      candidates_.resize(data.features);
      std::iota(candidates_.begin(), candidates_.end(), 0);
    } else {
      candidates_ = options.features;
    }
  }

  Tree grow() {
    OpenNode root = make_node(0, order_.size(), 0,
                              detail::build_histogram(data_, order_, targets_, options_.criterion.kind));
    if (options_.growth.kind == Growth::Kind::kLevelWise) {
      grow_level_wise(std::move(root));
    } else {
      grow_leaf_wise(std::move(root));
    }
    return Tree(std::move(nodes_));
  }

 private:
  bool may_split(int depth) const noexcept {
    return options_.growth.max_depth <= 0 || depth < options_.growth.max_depth;
  }

  OpenNode make_node(std::size_t begin, std::size_t end, int depth, detail::Histogram hist) {
    OpenNode node;
    node.id = static_cast<int>(nodes_.size());
    node.begin = begin;
    node.end = end;
    node.depth = depth;
    node.hist = std::move(hist);
    node.total = detail::total_stats(std::span(order_).subspan(begin, end - begin), targets_,
                                     options_.criterion.kind);
    TreeNode tree_node;
    tree_node.value = detail::leaf_value(node.total, options_.criterion);
    tree_node.cover = static_cast<double>(end - begin);
    nodes_.push_back(tree_node);
    if (end - begin >= 2 && may_split(depth)) node.split = find_split(node);
    if (!node.split) node.hist = {};
    return node;
  }

  std::optional<Split> find_split(const OpenNode& node) {
    const int per_split = options_.features_per_split;
    if (per_split <= 0 || static_cast<std::size_t>(per_split) >= candidates_.size()) {
      return detail::evaluate_histogram(node.hist, node.total, data_.map, options_.criterion, candidates_);
    }
    // Partial Fisher-Yates draw of per_split candidates.
    std::vector<int> pool = candidates_;
    for (int i = 0; i < per_split; ++i) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), pool.size() - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[pick(rng_)]);
    }
    const std::span<const int> drawn(pool.data(), static_cast<std::size_t>(per_split));
    auto split = detail::evaluate_histogram(node.hist, node.total, data_.map, options_.criterion, drawn);
    if (!split) {
      // Nothing usable among the drawn features; fall back to the rest.
      const std::span<const int> rest(pool.data() + per_split, pool.size() - static_cast<std::size_t>(per_split));
      split = detail::evaluate_histogram(node.hist, node.total, data_.map, options_.criterion, rest);
    }
    return split;
  }

  std::pair<OpenNode, OpenNode> split_node(OpenNode& node) {
    const Split& split = *node.split;
    const auto column = data_.column(static_cast<std::size_t>(split.feature));
    const auto first = order_.begin() + static_cast<std::ptrdiff_t>(node.begin);
    const auto last = order_.begin() + static_cast<std::ptrdiff_t>(node.end);
    const auto middle = std::stable_partition(first, last, [&](std::uint32_t r) {
      return column[r] <= static_cast<std::uint8_t>(split.bin);
    });
    const std::size_t mid = static_cast<std::size_t>(middle - order_.begin());

    // Histogram the smaller child directly; the larger one is parent - smaller.
    const bool left_smaller = mid - node.begin <= node.end - mid;
    const std::size_t small_begin = left_smaller ? node.begin : mid;
    const std::size_t small_end = left_smaller ? mid : node.end;
    detail::Histogram small = detail::build_histogram(
        data_, std::span(order_).subspan(small_begin, small_end - small_begin), targets_, options_.criterion.kind);
    detail::Histogram large = std::move(node.hist);
    large.subtract(small);

    auto& parent = nodes_[static_cast<std::size_t>(node.id)];
    parent.feature = split.feature;
    parent.threshold = split.threshold;
    parent.gain = split.gain;
    parent.value = 0.0;

    const int child_depth = node.depth + 1;
    OpenNode left = make_node(node.begin, mid, child_depth, left_smaller ? std::move(small) : std::move(large));
    OpenNode right = make_node(mid, node.end, child_depth, left_smaller ? std::move(large) : std::move(small));
    nodes_[static_cast<std::size_t>(node.id)].left = left.id;
    nodes_[static_cast<std::size_t>(node.id)].right = right.id;
    return {std::move(left), std::move(right)};
  }

  void grow_level_wise(OpenNode root) {
    // Depth-first order yields the same tree as breadth-first expansion
    // because every node's fate depends only on its own rows and depth.
    std::vector<OpenNode> stack;
    stack.push_back(std::move(root));
    while (!stack.empty()) {
      OpenNode node = std::move(stack.back());
      stack.pop_back();
      if (!node.split) continue;
      auto [left, right] = split_node(node);
      stack.push_back(std::move(right));
      stack.push_back(std::move(left));
    }
  }

  void grow_leaf_wise(OpenNode root) {
    const int cap = std::max(1, options_.growth.num_leaves);
    std::vector<OpenNode> open;
    open.push_back(std::move(root));
    int leaves = 1;
    while (leaves < cap) {
      std::size_t best = open.size();
      for (std::size_t i = 0; i < open.size(); ++i) {
        if (!open[i].split) continue;
        if (best == open.size() || open[i].split->gain > open[best].split->gain ||
            (open[i].split->gain == open[best].split->gain && open[i].id < open[best].id)) {
          best = i;
        }
      }
      if (best == open.size()) break;
      OpenNode node = std::move(open[best]);
      open.erase(open.begin() + static_cast<std::ptrdiff_t>(best));
      auto [left, right] = split_node(node);
      open.push_back(std::move(left));
      open.push_back(std::move(right));
      ++leaves;
    }
  }

  const BinnedMatrix& data_;
  const NodeTargets& targets_;
  const GrowOptions& options_;
  std::vector<std::uint32_t> order_;
  std::vector<int> candidates_;
  std::vector<TreeNode> nodes_;
  std::mt19937_64 rng_;
};

}  // namespace

Tree grow_tree(const BinnedMatrix& data, std::span<const std::uint32_t> rows, const NodeTargets& targets,
               const GrowOptions& options) {
  if (rows.empty()) throw DataError("cannot grow a tree on zero rows");
  options.criterion.validate();
  for (int f : options.features) {
    if (f < 0 || static_cast<std::size_t>(f) >= data.features) throw ConfigError("feature index out of range");
  }
  return TreeGrower(data, rows, targets, options).grow();
}

}  // namespace mapseg
