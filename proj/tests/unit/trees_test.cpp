#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "mapseg/error.hpp"
#include "mapseg/trees.hpp"
#include "matrices.hpp"

using namespace mapseg;
using namespace mapseg::testing;

namespace {

struct Targets {
  std::vector<double> grad;
  std::vector<double> hess;
  NodeTargets view(const FeatureMatrix& m) const { return {m.labels, grad, hess}; }
};

Targets half_probability_targets(const FeatureMatrix& m) {
  Targets t;
  for (auto y : m.labels) {
    const auto gh = grad_hess(0.5, y);
    t.grad.push_back(gh.grad);
    t.hess.push_back(gh.hess);
  }
  return t;
}

Targets random_targets(std::mt19937_64& rng, const FeatureMatrix& m) {
  std::uniform_real_distribution<double> p(0.02, 0.98);
  Targets t;
  for (auto y : m.labels) {
    const auto gh = grad_hess(p(rng), y);
    t.grad.push_back(gh.grad);
    t.hess.push_back(gh.hess);
  }
  return t;
}

const FeatureMatrix& four_points() {
  static const FeatureMatrix m = make_matrix({{1, 2, 3, 4}}, {0, 0, 1, 1});
  return m;
}

}  // namespace

TEST(GradHess, Examples) {
  auto gh = grad_hess(0.5, 1);
  EXPECT_DOUBLE_EQ(gh.grad, -0.5);
  EXPECT_DOUBLE_EQ(gh.hess, 0.25);
  gh = grad_hess(0.5, 0);
  EXPECT_DOUBLE_EQ(gh.grad, 0.5);
  EXPECT_DOUBLE_EQ(gh.hess, 0.25);
  gh = grad_hess(0.9, 1);
  EXPECT_NEAR(gh.grad, -0.1, 1e-15);
  EXPECT_NEAR(gh.hess, 0.09, 1e-15);
}

TEST(GradHess, RejectsClosedEnds) {
  EXPECT_THROW(grad_hess(0.0, 1), std::domain_error);
  EXPECT_THROW(grad_hess(1.0, 0), std::domain_error);
  EXPECT_THROW(grad_hess(std::nan(""), 0), std::domain_error);
}

TEST(GradHess, Ranges) {
  for (double p = 0.001; p < 1.0; p += 0.0137) {
    for (int y : {0, 1}) {
      const auto gh = grad_hess(p, y);
      ASSERT_GT(gh.grad, -1.0);
      ASSERT_LT(gh.grad, 1.0);
      ASSERT_GT(gh.hess, 0.0);
      ASSERT_LE(gh.hess, 0.25);
    }
  }
}

TEST(Bins, EightBitColumnGetsOneBinPerValue) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> v(0, 255);
  std::vector<float> col(5000);
  for (auto& x : col) x = static_cast<float>(v(rng));
  const auto m = make_matrix({col}, std::vector<std::uint8_t>(col.size(), 0));
  const auto bins = build_bins(m);
  std::vector<float> distinct = col;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  EXPECT_EQ(bins.num_bins(0), static_cast<int>(distinct.size()));
  for (std::size_t i = 0; i < distinct.size(); ++i) ASSERT_EQ(bins.bin(0, distinct[i]), i);
}

TEST(Bins, ConstantColumnIsOneBinAndNeverSplits) {
  const auto m = make_matrix({{3, 3, 3, 3}}, {0, 1, 0, 1});
  const auto data = binned(m);
  EXPECT_EQ(data.map.num_bins(0), 1);
  const auto rows = all_rows(4);
  const auto features = all_features(1);
  EXPECT_FALSE(best_split(data, rows, {m.labels, {}, {}}, SplitCriterion::gini(), features));
}

TEST(Bins, UniformRealsGetEqualFrequencyBins) {
  constexpr std::size_t n = 10000;
  constexpr int max_bins = 256;
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<float> v(0.0f, 1.0f);
  std::vector<float> col(n);
  for (auto& x : col) x = v(rng);
  const auto m = make_matrix({col}, std::vector<std::uint8_t>(n, 0));
  const auto bins = build_bins(m, max_bins);
  ASSERT_EQ(bins.num_bins(0), max_bins);
  std::vector<std::size_t> population(max_bins);
  for (float x : col) ++population[bins.bin(0, x)];

  // Quantile oracle: on distinct sorted values, bin k ends at rank ceil((k+1) n / B).
  std::vector<float> sorted = col;
  std::sort(sorted.begin(), sorted.end());
  const double ideal = static_cast<double>(n) / max_bins;
  std::size_t start = 0;
  for (int k = 0; k < max_bins; ++k) {
    const auto end = static_cast<std::size_t>(std::ceil((k + 1) * ideal - 1e-9));
    ASSERT_EQ(population[static_cast<std::size_t>(k)], end - start) << k;
    start = end;
    // Populations are whole rows, so +-2% of 39.06 is met up to one row.
    ASSERT_LE(std::abs(static_cast<double>(population[static_cast<std::size_t>(k)]) - ideal), 0.02 * ideal + 1.0);
  }
}

TEST(Bins, MonotoneBinIndex) {
  const auto m = make_matrix({{5, 1, 9, 3, 7}}, {0, 0, 0, 0, 0});
  const auto bins = build_bins(m);
  for (float a = 0; a < 10; a += 0.25f) ASSERT_LE(bins.bin(0, a), bins.bin(0, a + 0.25f));
}

TEST(Bins, RejectsBadArguments) {
  const auto m = make_matrix({{1, 2}}, {0, 1});
  EXPECT_THROW(build_bins(m, 1), ConfigError);
  EXPECT_THROW(build_bins(make_matrix({{}}, {}), 256), DataError);
}

TEST(BestSplit, GiniFourPoints) {
  const auto& m = four_points();
  const auto data = binned(m);
  const auto rows = all_rows(4);
  const auto features = all_features(1);
  const auto s = best_split(data, rows, {m.labels, {}, {}}, SplitCriterion::gini(), features);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->feature, 0);
  EXPECT_DOUBLE_EQ(s->threshold, 2.5);
  EXPECT_NEAR(s->gain, 0.5, 1e-12);
}

TEST(BestSplit, GradFourPoints) {
  const auto& m = four_points();
  const auto data = binned(m);
  const auto rows = all_rows(4);
  const auto features = all_features(1);
  const auto t = half_probability_targets(m);
  const auto s = best_split(data, rows, t.view(m), SplitCriterion::grad_gain(0, 0, 0, 0), features);
  ASSERT_TRUE(s);
  EXPECT_DOUBLE_EQ(s->threshold, 2.5);
  EXPECT_NEAR(s->gain, 2.0, 1e-12);
  EXPECT_FALSE(best_split(data, rows, t.view(m), SplitCriterion::grad_gain(0, 0, 3.0, 0), features));
}

TEST(BestSplit, MinChildWeightBlocksLightChildren) {
  const auto& m = four_points();
  const auto data = binned(m);
  const auto rows = all_rows(4);
  const auto features = all_features(1);
  const auto t = half_probability_targets(m);
  EXPECT_TRUE(best_split(data, rows, t.view(m), SplitCriterion::grad_gain(0, 0, 0, 0.5), features));
  EXPECT_FALSE(best_split(data, rows, t.view(m), SplitCriterion::grad_gain(0, 0, 0, 0.51), features));
}

TEST(BestSplit, PureNodeHasNoSplit) {
  const auto m = make_matrix({{1, 2, 3, 4}}, {1, 1, 1, 1});
  const auto rows = all_rows(4);
  const auto features = all_features(1);
  EXPECT_FALSE(best_split(binned(m), rows, {m.labels, {}, {}}, SplitCriterion::gini(), features));
  EXPECT_FALSE(exhaustive_split_oracle(m, rows, {m.labels, {}, {}}, SplitCriterion::gini(), features));
}

TEST(BestSplit, TiesGoToLowerFeatureThenLowerThreshold) {
  // Feature 1 duplicates feature 0; labels make thresholds 1.5 and 3.5 equally good.
  const auto m = make_matrix({{1, 2, 3, 4}, {1, 2, 3, 4}}, {1, 0, 0, 1});
  const auto rows = all_rows(4);
  const auto features = all_features(2);
  const auto s = best_split(binned(m), rows, {m.labels, {}, {}}, SplitCriterion::gini(), features);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->feature, 0);
  EXPECT_DOUBLE_EQ(s->threshold, 1.5);
  const auto o = exhaustive_split_oracle(m, rows, {m.labels, {}, {}}, SplitCriterion::gini(), features);
  EXPECT_EQ(o->feature, 0);
  EXPECT_DOUBLE_EQ(o->threshold, 1.5);
}

TEST(BestSplit, MatchesExhaustiveOracleWhenBinsAreExact) {
  std::mt19937_64 rng(33);
  std::uniform_int_distribution<std::size_t> nrows(2, 512);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = random_integer_matrix(rng, nrows(rng), 4, 12);
    const auto data = binned(m);
    const auto rows = all_rows(m.num_rows());
    const auto features = all_features(4);
    const auto t = random_targets(rng, m);
    for (const auto& crit : {SplitCriterion::gini(), SplitCriterion::grad_gain(0.5, 0.1, 0.0, 0.2)}) {
      const auto s = best_split(data, rows, t.view(m), crit, features);
      const auto o = exhaustive_split_oracle(m, rows, t.view(m), crit, features);
      ASSERT_EQ(s.has_value(), o.has_value()) << trial;
      if (!s) continue;
      ASSERT_EQ(s->feature, o->feature) << trial;
      ASSERT_NEAR(s->gain, o->gain, 1e-9) << trial;
      ASSERT_DOUBLE_EQ(s->threshold, o->threshold) << trial;
    }
  }
}

TEST(BestSplit, OracleDominatesCoarseBins) {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<float> v(0.0f, 1.0f);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<float>> cols(3, std::vector<float>(200));
    std::vector<std::uint8_t> labels(200);
    for (std::size_t r = 0; r < 200; ++r) {
      for (auto& c : cols) c[r] = v(rng);
      labels[r] = cols[0][r] + 0.3f * cols[1][r] > 0.6f ? 1 : 0;
    }
    const auto m = make_matrix(cols, labels);
    const auto rows = all_rows(200);
    const auto features = all_features(3);
    const auto coarse = best_split(binned(m, 16), rows, {m.labels, {}, {}}, SplitCriterion::gini(), features);
    const auto exact = best_split(binned(m, 256), rows, {m.labels, {}, {}}, SplitCriterion::gini(), features);
    const auto o = exhaustive_split_oracle(m, rows, {m.labels, {}, {}}, SplitCriterion::gini(), features);
    ASSERT_TRUE(coarse && exact && o);
    ASSERT_GE(o->gain + 1e-12, coarse->gain);
    ASSERT_NEAR(o->gain, exact->gain, 1e-12);
  }
}

TEST(BestSplit, RowSubsetsAgreeWithOracle) {
  std::mt19937_64 rng(35);
  const auto m = random_integer_matrix(rng, 300, 3, 8);
  const auto data = binned(m);
  std::vector<std::uint32_t> rows;
  for (std::uint32_t r = 0; r < 300; r += 3) rows.push_back(r);
  const auto features = std::vector<int>{2, 0};
  const auto s = best_split(data, rows, {m.labels, {}, {}}, SplitCriterion::gini(), features);
  const auto o = exhaustive_split_oracle(m, rows, {m.labels, {}, {}}, SplitCriterion::gini(), features);
  ASSERT_TRUE(s && o);
  EXPECT_EQ(s->feature, o->feature);
  EXPECT_NEAR(s->gain, o->gain, 1e-12);
}

TEST(SplitCriterion, RejectsNegativeParameters) {
  EXPECT_THROW(SplitCriterion::grad_gain(-1, 0, 0, 0).validate(), ConfigError);
  EXPECT_THROW(SplitCriterion::grad_gain(0, -1, 0, 0).validate(), ConfigError);
  EXPECT_THROW(SplitCriterion::grad_gain(0, 0, -1, 0).validate(), ConfigError);
  EXPECT_THROW(SplitCriterion::grad_gain(0, 0, 0, -1).validate(), ConfigError);
  EXPECT_NO_THROW(SplitCriterion::grad_gain(0.04, 177, 8.3, 5).validate());
}

TEST(LeafValues, Formulas) {
  EXPECT_DOUBLE_EQ(grad_leaf_value(1.0, 0.5, 0.0, 0.0), -2.0);
  EXPECT_DOUBLE_EQ(grad_leaf_value(-1.0, 0.5, 0.0, 0.0), 2.0);
  EXPECT_DOUBLE_EQ(grad_leaf_value(3.0, 1.0, 1.0, 1.0), -1.0);
  EXPECT_DOUBLE_EQ(grad_leaf_value(0.5, 1.0, 0.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(gini_leaf_value(3, 4), 0.75);
}

TEST(GrowTree, SeparableStumpReproducesLabels) {
  const auto& m = four_points();
  const auto rows = all_rows(4);
  GrowOptions opt;
  opt.growth = Growth::level_wise(1);
  const Tree tree = grow_tree(binned(m), rows, {m.labels, {}, {}}, opt);
  EXPECT_EQ(tree.num_leaves(), 2);
  for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(tree.predict(m.row(r)), m.labels[r]);
}

TEST(GrowTree, SingleLeafCarriesBaseStatistic) {
  const auto& m = four_points();
  const auto rows = all_rows(4);
  const auto t = half_probability_targets(m);
  GrowOptions opt;
  opt.criterion = SplitCriterion::grad_gain(0, 0, 0, 0);
  opt.growth = Growth::leaf_wise(1, 0);
  const Tree tree = grow_tree(binned(m), rows, t.view(m), opt);
  ASSERT_EQ(tree.nodes().size(), 1u);
  EXPECT_DOUBLE_EQ(tree.nodes()[0].value, 0.0);
  opt.criterion = SplitCriterion::gini();
  EXPECT_DOUBLE_EQ(grow_tree(binned(m), rows, {m.labels, {}, {}}, opt).nodes()[0].value, 0.5);
}

TEST(GrowTree, GradStumpLeavesAreMinusTwoAndTwo) {
  const auto& m = four_points();
  const auto rows = all_rows(4);
  const auto t = half_probability_targets(m);
  GrowOptions opt;
  opt.criterion = SplitCriterion::grad_gain(0, 0, 0, 0);
  opt.growth = Growth::level_wise(1);
  const Tree tree = grow_tree(binned(m), rows, t.view(m), opt);
  EXPECT_NEAR(tree.predict(m.row(0)), -2.0, 1e-12);
  EXPECT_NEAR(tree.predict(m.row(3)), 2.0, 1e-12);
}

TEST(GrowTree, LeafWiseHitsLeafCapAndDepth) {
  std::mt19937_64 rng(36);
  const auto m = random_integer_matrix(rng, 2000, 5, 20);
  const auto data = binned(m);
  const auto rows = all_rows(m.num_rows());
  const auto t = random_targets(rng, m);
  for (int leaves : {2, 5, 17, 40}) {
    for (int depth : {0, 3, 6}) {
      GrowOptions opt;
      opt.criterion = SplitCriterion::grad_gain(0.0, 0.0, 0.0, 1e-3);
      opt.growth = Growth::leaf_wise(leaves, depth);
      const Tree tree = grow_tree(data, rows, t.view(m), opt);
      const int achievable = depth > 0 ? std::min(leaves, 1 << depth) : leaves;
      EXPECT_EQ(tree.num_leaves(), achievable) << leaves << "/" << depth;
      if (depth > 0) EXPECT_LE(tree.depth(), depth);
    }
  }
}

TEST(GrowTree, LevelWiseRespectsDepth) {
  std::mt19937_64 rng(37);
  const auto m = random_integer_matrix(rng, 1000, 4, 16);
  const auto rows = all_rows(m.num_rows());
  for (int depth : {1, 2, 4, 7}) {
    GrowOptions opt;
    opt.growth = Growth::level_wise(depth);
    const Tree tree = grow_tree(binned(m), rows, {m.labels, {}, {}}, opt);
    EXPECT_LE(tree.depth(), depth);
    EXPECT_LE(tree.num_leaves(), 1 << depth);
  }
}

TEST(GrowTree, GradLeavesEqualMinusGOverHPlusLambda) {
  std::mt19937_64 rng(38);
  const auto m = random_integer_matrix(rng, 800, 3, 10);
  const auto data = binned(m);
  const auto rows = all_rows(m.num_rows());
  const auto t = random_targets(rng, m);
  const double lambda = 0.7;
  GrowOptions opt;
  opt.criterion = SplitCriterion::grad_gain(lambda, 0, 0, 0);
  opt.growth = Growth::leaf_wise(12, 0);
  const Tree tree = grow_tree(data, rows, t.view(m), opt);
  std::map<double, std::pair<double, double>> per_leaf;
  for (std::size_t r = 0; r < m.num_rows(); ++r) {
    auto& [g, h] = per_leaf[tree.predict(m.row(r))];
    g += t.grad[r];
    h += t.hess[r];
  }
  for (const auto& [value, gh] : per_leaf) EXPECT_NEAR(value, -gh.first / (gh.second + lambda), 1e-12);
}

TEST(GrowTree, MonotoneTransformLeavesPartitionUnchanged) {
  std::mt19937_64 rng(39);
  const auto m = random_integer_matrix(rng, 600, 3, 30);
  FeatureMatrix warped = m;
  for (auto& v : warped.values) v = std::exp(0.2f * v) - 40.0f;
  const auto rows = all_rows(m.num_rows());
  GrowOptions opt;
  opt.growth = Growth::level_wise(5);
  const Tree a = grow_tree(binned(m), rows, {m.labels, {}, {}}, opt);
  const Tree b = grow_tree(binned(warped), rows, {warped.labels, {}, {}}, opt);
  ASSERT_EQ(a.nodes().size(), b.nodes().size());
  for (std::size_t r = 0; r < m.num_rows(); ++r) ASSERT_EQ(a.predict(m.row(r)), b.predict(warped.row(r)));
}

TEST(GrowTree, DeterministicUnderFeatureSampling) {
  std::mt19937_64 rng(40);
  const auto m = random_integer_matrix(rng, 700, 6, 12);
  const auto data = binned(m);
  const auto rows = all_rows(m.num_rows());
  GrowOptions opt;
  opt.growth = Growth::level_wise(0);
  opt.features_per_split = 2;
  opt.seed = 99;
  const Tree a = grow_tree(data, rows, {m.labels, {}, {}}, opt);
  EXPECT_EQ(a, grow_tree(data, rows, {m.labels, {}, {}}, opt));
  opt.seed = 100;
  EXPECT_NE(a, grow_tree(data, rows, {m.labels, {}, {}}, opt));
}

TEST(GrowTree, UnlimitedGiniTreeFitsDistinctRows) {
  std::mt19937_64 rng(41);
  const auto m = random_integer_matrix(rng, 400, 4, 50);
  const auto rows = all_rows(m.num_rows());
  GrowOptions opt;
  opt.growth = Growth::level_wise(0);
  const Tree tree = grow_tree(binned(m), rows, {m.labels, {}, {}}, opt);
  // Rows with identical features but different labels cannot be separated.
  std::map<std::vector<float>, std::pair<int, int>> groups;
  for (std::size_t r = 0; r < m.num_rows(); ++r) {
    auto& [pos, n] = groups[std::vector<float>(m.row(r).begin(), m.row(r).end())];
    pos += m.labels[r];
    ++n;
  }
  for (std::size_t r = 0; r < m.num_rows(); ++r) {
    const auto& [pos, n] = groups[std::vector<float>(m.row(r).begin(), m.row(r).end())];
    ASSERT_DOUBLE_EQ(tree.predict(m.row(r)), static_cast<double>(pos) / n);
  }
}
