#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mapseg/design_matrix.hpp"
#include "mapseg/trees.hpp"

namespace mapseg {

enum class LearnerKind { kRandomForest, kGbdt, kLgbm };

std::string_view learner_name(LearnerKind kind) noexcept;  // "rf", "gbdt", "lgbm"
LearnerKind parse_learner_kind(std::string_view name);

enum class FeatureRule { kSqrt, kAll };

struct RandomForestParams {
  int n_estimators = 10;
  bool bootstrap = true;
  FeatureRule features_per_split = FeatureRule::kSqrt;
  int max_depth = 0;  // <= 0: grow until pure
};

// Level-wise regularized boosting. Learning rate and rounds follow the usual
// library defaults; the rest are fixed regularization settings.
struct GbdtParams {
  double colsample_bytree = 0.9;
  double gamma = 8.3;
  int max_depth = 8;
  double min_child_weight = 5.0;
  double alpha = 177.0;
  double lambda = 0.04;
  double learning_rate = 0.3;
  int n_rounds = 100;
};

// Leaf-wise histogram boosting.
struct LgbmParams {
  double learning_rate = 0.05;
  int num_leaves = 100;
  int max_depth = 10;
  int n_rounds = 100;
  double lambda = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  double min_child_weight = 1e-3;
  std::vector<std::string> metrics = {"auc", "binary_logloss"};
};

struct LearnerConfig {
  LearnerKind kind = LearnerKind::kLgbm;
  RandomForestParams rf;
  GbdtParams gbdt;
  LgbmParams lgbm;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  int max_bins = kMaxBins;

  // Throws ConfigError when a rate leaves (0, 1], a count is < 1 or the
  // threshold leaves (0, 1).
  void validate() const;
};

struct MetricTrace {
  std::string name;
  std::vector<double> values;
  friend bool operator==(const MetricTrace&, const MetricTrace&) = default;
};

struct TrainedEnsemble {
  LearnerKind kind = LearnerKind::kLgbm;
  std::vector<std::string> feature_names;
  std::vector<Tree> trees;
  double base_score = 0.0;
  double learning_rate = 1.0;
  double threshold = 0.5;
  LearnerConfig config;
  std::vector<MetricTrace> metric_trace;

  // Random forest: mean leaf vote. Boosting: sigmoid(base + lr * sum of trees).
  double predict_proba(std::span<const float> row) const noexcept;
  double raw_score(std::span<const float> row) const noexcept;
  std::vector<double> predict_proba(const FeatureMatrix& matrix) const;
  const MetricTrace* trace(std::string_view name) const noexcept;
};

// Dispatches on config.kind.
TrainedEnsemble train(const FeatureMatrix& matrix, const LearnerConfig& config);

// Gini trees on bootstrap resamples with ceil(sqrt(F)) candidate features
// per split. Throws DataError for single-class data.
TrainedEnsemble train_random_forest(const FeatureMatrix& matrix, const LearnerConfig& config);

// Base score is the clamped log-odds of the label mean. Each round fits a
// level-wise tree on a per-tree column sample and traces training log-loss.
// Throws DivergenceError if the loss stops being finite.
TrainedEnsemble train_gbdt(const FeatureMatrix& matrix, const LearnerConfig& config);

// As train_gbdt with leaf-wise growth, no column sampling and the configured
// metric traces.
TrainedEnsemble train_lgbm(const FeatureMatrix& matrix, const LearnerConfig& config);

struct MaskPrediction {
  Mask mask;
  Grid<float> probability;
};

// Pixel is 1 iff probability >= threshold. Rows are placed by provenance.
// Throws ConfigError when the matrix columns differ from the model's features.
MaskPrediction predict_mask(const TrainedEnsemble& model, const FeatureMatrix& tile_rows, int rows, int cols,
                            double threshold);
MaskPrediction predict_tile(const TrainedEnsemble& model, const Tile& tile, const FeatureSpec& spec);

// Split gains summed per feature (gini decrease weighted by node rows for rf,
// grad gain for boosting), normalized to 1 and sorted descending.
// Throws DataError when no tree has a split.
std::vector<std::pair<std::string, double>> feature_importance(const TrainedEnsemble& model);

// Structured JSON with a fixed field order; loading checks schema_version.
std::string model_to_json(const TrainedEnsemble& model);
TrainedEnsemble model_from_json(std::string_view text);
void save_model(const TrainedEnsemble& model, const std::filesystem::path& path);
TrainedEnsemble load_model(const std::filesystem::path& path);

}  // namespace mapseg
