#include "mapseg/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mapseg/error.hpp"
#include "mapseg/metrics.hpp"
#include "mapseg/parallel.hpp"

namespace mapseg {

namespace {

constexpr double kBaseScoreClamp = 10.0;

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derived_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(master ^ splitmix64(index + 1));
}

double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

void require_two_classes(const FeatureMatrix& matrix) {
  if (matrix.num_rows() == 0) throw DataError("training matrix is empty");
  const auto positives = std::count(matrix.labels.begin(), matrix.labels.end(), std::uint8_t{1});
  if (positives == 0 || static_cast<std::size_t>(positives) == matrix.num_rows()) {
    throw DataError("training labels contain a single class");
  }
}

std::vector<std::uint32_t> all_rows(std::size_t n) {
  std::vector<std::uint32_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0u);
  return rows;
}

struct BoostSettings {
  SplitCriterion criterion;
  Growth growth;
  double learning_rate = 0.1;
  int rounds = 100;
  double colsample = 1.0;
  std::vector<std::string> metrics;
};

TrainedEnsemble boost(const FeatureMatrix& matrix, const LearnerConfig& config, const BoostSettings& settings) {
  require_two_classes(matrix);
  const std::size_t n = matrix.num_rows();
  const std::size_t width = matrix.num_features();
  const BinnedMatrix binned = bin_matrix(matrix, build_bins(matrix, config.max_bins));
  const auto rows = all_rows(n);

  TrainedEnsemble model;
  model.kind = config.kind;
  model.feature_names = matrix.columns;
  model.learning_rate = settings.learning_rate;
  model.threshold = config.threshold;
  model.config = config;
  for (const auto& name : settings.metrics) model.metric_trace.push_back({name, {}});

  const double positives = static_cast<double>(std::count(matrix.labels.begin(), matrix.labels.end(), std::uint8_t{1}));
  const double mean = positives / static_cast<double>(n);
  model.base_score = std::clamp(std::log(mean / (1.0 - mean)), -kBaseScoreClamp, kBaseScoreClamp);

  std::vector<double> score(n, model.base_score);
  std::vector<double> prob(n);
  std::vector<double> grad(n);
  std::vector<double> hess(n);
  const NodeTargets targets{matrix.labels, grad, hess};
  std::mt19937_64 rng(config.seed);

  std::vector<int> all_features(width);
  std::iota(all_features.begin(), all_features.end(), 0);
  const std::size_t sampled =
      std::min(width, static_cast<std::size_t>(std::ceil(settings.colsample * static_cast<double>(width) - 1e-12)));

  for (int round = 0; round < settings.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(score[i]);
      grad[i] = p - matrix.labels[i];
      hess[i] = std::max(p * (1.0 - p), 1e-16);
    }

    GrowOptions options;
    options.criterion = settings.criterion;
    options.growth = settings.growth;
    options.seed = derived_seed(config.seed, static_cast<std::uint64_t>(round));
    if (sampled < width) {
      // Column sample drawn once per tree from the shared generator.
      std::vector<int> pool = all_features;
      for (std::size_t k = 0; k < sampled; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
        std::swap(pool[k], pool[pick(rng)]);
      }
      options.features.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(sampled));
      std::sort(options.features.begin(), options.features.end());
    }
    Tree tree = grow_tree(binned, rows, targets, options);

    for (std::size_t i = 0; i < n; ++i) {
      score[i] += settings.learning_rate * tree.predict(matrix.row(i));
      prob[i] = sigmoid(score[i]);
    }
    model.trees.push_back(std::move(tree));

    for (auto& trace : model.metric_trace) {
      const double value = trace.name == "auc" ? auc(prob, matrix.labels) : binary_logloss(prob, matrix.labels);
      if (!std::isfinite(value)) {
        throw DivergenceError("training " + trace.name + " is not finite at round " + std::to_string(round), round);
      }
      trace.values.push_back(value);
    }
  }
  return model;
}

}  // namespace

std::string_view learner_name(LearnerKind kind) noexcept {
  switch (kind) {
    case LearnerKind::kRandomForest:
      return "rf";
    case LearnerKind::kGbdt:
      return "gbdt";
    case LearnerKind::kLgbm:
      return "lgbm";
  }
  return "unknown";
}

LearnerKind parse_learner_kind(std::string_view name) {
  if (name == "rf") return LearnerKind::kRandomForest;
  if (name == "gbdt" || name == "xgboost") return LearnerKind::kGbdt;
  if (name == "lgbm" || name == "lightgbm") return LearnerKind::kLgbm;
  throw ConfigError("unknown model kind: " + std::string(name));
}

void LearnerConfig::validate() const {
  auto rate = [](double v, const char* what) {
    if (!(v > 0.0 && v <= 1.0)) throw ConfigError(std::string(what) + " must lie in (0, 1]");
  };
  auto count = [](int v, const char* what) {
    if (v < 1) throw ConfigError(std::string(what) + " must be at least 1");
  };
  auto non_negative = [](double v, const char* what) {
    if (!(v >= 0.0)) throw ConfigError(std::string(what) + " must be non-negative");
  };
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
  if (max_bins < 2 || max_bins > kMaxBins) throw ConfigError("max_bins must lie in [2, 256]");
  switch (kind) {
    case LearnerKind::kRandomForest:
      count(rf.n_estimators, "n_estimators");
      break;
    case LearnerKind::kGbdt:
      rate(gbdt.colsample_bytree, "colsample_bytree");
      rate(gbdt.learning_rate, "learning_rate");
      count(gbdt.n_rounds, "n_rounds");
      count(gbdt.max_depth, "max_depth");
      non_negative(gbdt.gamma, "gamma");
      non_negative(gbdt.min_child_weight, "min_child_weight");
      non_negative(gbdt.alpha, "reg_alpha");
      non_negative(gbdt.lambda, "reg_lambda");
      break;
    case LearnerKind::kLgbm:
      rate(lgbm.learning_rate, "learning_rate");
      count(lgbm.n_rounds, "n_rounds");
      count(lgbm.num_leaves, "num_leaves");
      non_negative(lgbm.gamma, "gamma");
      non_negative(lgbm.min_child_weight, "min_child_weight");
      non_negative(lgbm.alpha, "reg_alpha");
      non_negative(lgbm.lambda, "reg_lambda");
      for (const auto& m : lgbm.metrics) {
        if (m != "auc" && m != "binary_logloss") throw ConfigError("unknown metric: " + m);
      }
      break;
  }
}

double TrainedEnsemble::raw_score(std::span<const float> row) const noexcept {
  if (kind == LearnerKind::kRandomForest) {
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(row);
    return trees.empty() ? 0.0 : sum / static_cast<double>(trees.size());
  }
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(row);
  return base_score + learning_rate * sum;
}

double TrainedEnsemble::predict_proba(std::span<const float> row) const noexcept {
  const double raw = raw_score(row);
  return kind == LearnerKind::kRandomForest ? raw : sigmoid(raw);
}

std::vector<double> TrainedEnsemble::predict_proba(const FeatureMatrix& matrix) const {
  if (matrix.columns != feature_names) throw ConfigError("matrix columns do not match the model's features");
  std::vector<double> out(matrix.num_rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = predict_proba(matrix.row(i));
  return out;
}

const MetricTrace* TrainedEnsemble::trace(std::string_view name) const noexcept {
  for (const auto& t : metric_trace) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

TrainedEnsemble train(const FeatureMatrix& matrix, const LearnerConfig& config) {
  switch (config.kind) {
    case LearnerKind::kRandomForest:
      return train_random_forest(matrix, config);
    case LearnerKind::kGbdt:
      return train_gbdt(matrix, config);
    case LearnerKind::kLgbm:
      return train_lgbm(matrix, config);
  }
  throw ConfigError("unknown learner");
}

TrainedEnsemble train_random_forest(const FeatureMatrix& matrix, const LearnerConfig& config) {
  LearnerConfig cfg = config;
  cfg.kind = LearnerKind::kRandomForest;
  cfg.validate();
  require_two_classes(matrix);
  const std::size_t n = matrix.num_rows();
  const std::size_t width = matrix.num_features();
  const BinnedMatrix binned = bin_matrix(matrix, build_bins(matrix, cfg.max_bins));
  const NodeTargets targets{matrix.labels, {}, {}};

  TrainedEnsemble model;
  model.kind = LearnerKind::kRandomForest;
  model.feature_names = matrix.columns;
  model.learning_rate = 1.0;
  model.threshold = cfg.threshold;
  model.config = cfg;
  model.trees.resize(static_cast<std::size_t>(cfg.rf.n_estimators));

  const int per_split = cfg.rf.features_per_split == FeatureRule::kSqrt
                            ? static_cast<int>(std::ceil(std::sqrt(static_cast<double>(width))))
                            : 0;
  parallel_for(model.trees.size(), [&](std::size_t t) {
    const std::uint64_t seed = derived_seed(cfg.seed, t);
    std::vector<std::uint32_t> rows;
    if (cfg.rf.bootstrap) {
      std::mt19937_64 rng(seed);
      std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
      rows.resize(n);
      for (auto& r : rows) r = pick(rng);
      std::sort(rows.begin(), rows.end());
    } else {
      rows = all_rows(n);
    }
    GrowOptions options;
    options.criterion = SplitCriterion::gini();
    options.growth = Growth::level_wise(cfg.rf.max_depth);
    options.features_per_split = per_split;
    options.seed = splitmix64(seed);
    model.trees[t] = grow_tree(binned, rows, targets, options);
  });
  return model;
}

TrainedEnsemble train_gbdt(const FeatureMatrix& matrix, const LearnerConfig& config) {
  LearnerConfig cfg = config;
  cfg.kind = LearnerKind::kGbdt;
  cfg.validate();
  const auto& p = cfg.gbdt;
  BoostSettings settings;
  settings.criterion = SplitCriterion::grad_gain(p.lambda, p.alpha, p.gamma, p.min_child_weight);
  settings.growth = Growth::level_wise(p.max_depth);
  settings.learning_rate = p.learning_rate;
  settings.rounds = p.n_rounds;
  settings.colsample = p.colsample_bytree;
  settings.metrics = {"binary_logloss"};
  return boost(matrix, cfg, settings);
}

TrainedEnsemble train_lgbm(const FeatureMatrix& matrix, const LearnerConfig& config) {
  LearnerConfig cfg = config;
  cfg.kind = LearnerKind::kLgbm;
  cfg.validate();
  const auto& p = cfg.lgbm;
  BoostSettings settings;
  settings.criterion = SplitCriterion::grad_gain(p.lambda, p.alpha, p.gamma, p.min_child_weight);
  settings.growth = Growth::leaf_wise(p.num_leaves, p.max_depth);
  settings.learning_rate = p.learning_rate;
  settings.rounds = p.n_rounds;
  settings.metrics = p.metrics;
  return boost(matrix, cfg, settings);
}

MaskPrediction predict_mask(const TrainedEnsemble& model, const FeatureMatrix& tile_rows, int rows, int cols,
                            double threshold) {
  if (tile_rows.columns != model.feature_names) {
    throw ConfigError("tile features do not match the model's feature names");
  }
  if (tile_rows.provenance.size() != tile_rows.num_rows()) throw DataError("tile rows lack provenance");
  MaskPrediction out{Mask(rows, cols), Grid<float>(rows, cols)};
  for (std::size_t i = 0; i < tile_rows.num_rows(); ++i) {
    const auto& where = tile_rows.provenance[i];
    if (where.variant != MaskVariant::kOriginal) continue;
    const double p = model.predict_proba(tile_rows.row(i));
    out.probability(where.row, where.col) = static_cast<float>(p);
    out.mask(where.row, where.col) = p >= threshold ? 1 : 0;
  }
  return out;
}

MaskPrediction predict_tile(const TrainedEnsemble& model, const Tile& tile, const FeatureSpec& spec) {
  return predict_mask(model, tile_feature_rows(tile, spec), tile.rows(), tile.cols(), model.threshold);
}

std::vector<std::pair<std::string, double>> feature_importance(const TrainedEnsemble& model) {
  std::vector<double> weight(model.feature_names.size(), 0.0);
  bool any_split = false;
  for (const auto& tree : model.trees) {
    for (const auto& node : tree.nodes()) {
      if (node.is_leaf()) continue;
      any_split = true;
      const double w = model.kind == LearnerKind::kRandomForest ? node.gain * node.cover : node.gain;
      weight.at(static_cast<std::size_t>(node.feature)) += w;
    }
  }
  if (!any_split) throw DataError("model has no splits; importance is undefined");
  const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
  std::vector<std::size_t> order(weight.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return weight[a] > weight[b]; });
  std::vector<std::pair<std::string, double>> ranked;
  for (auto f : order) ranked.emplace_back(model.feature_names[f], weight[f] / total);
  return ranked;
}

}  // namespace mapseg
