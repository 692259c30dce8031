#include "mapseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mapseg/error.hpp"
#include "mapseg/morphology.hpp"

namespace mapseg {

void EvalConfig::validate() const {
  if (biou_width < 1) throw ConfigError("BIoU band width must be at least 1");
  if (empty_score != 0.0 && empty_score != 1.0) throw ConfigError("empty-mask score must be 0 or 1");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
}

double iou(const Mask& gt, const Mask& pred, double empty_score) {
  if (!gt.same_shape(pred)) throw DataError("IoU of masks with different shapes");
  std::size_t inter = 0;
  std::size_t ones_gt = 0;
  std::size_t ones_pred = 0;
  const auto a = gt.values();
  const auto b = pred.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0;
    const bool y = b[i] != 0;
    ones_gt += x;
    ones_pred += y;
    inter += x && y;
  }
  const std::size_t uni = ones_gt + ones_pred - inter;
  if (uni == 0) return empty_score;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double biou(const Mask& gt, const Mask& pred, int d, double empty_score) {
  if (!gt.same_shape(pred)) throw DataError("BIoU of masks with different shapes");
  return iou(inner_band(gt, d), inner_band(pred, d), empty_score);
}

double binary_logloss(std::span<const double> probabilities, std::span<const std::uint8_t> labels) {
  if (probabilities.size() != labels.size()) throw DataError("logloss length mismatch");
  if (probabilities.empty()) throw DataError("logloss of an empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(probabilities[i], kLoglossClamp, 1.0 - kLoglossClamp);
    sum += labels[i] ? std::log(p) : std::log1p(-p);
  }
  return -sum / static_cast<double>(labels.size());
}

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw DataError("AUC length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  double positives = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j share their mean.
    const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        positive_rank_sum += mean_rank;
        positives += 1.0;
      }
    }
    i = j;
  }
  const double negatives = static_cast<double>(labels.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) throw DataError("AUC needs both classes");
  return (positive_rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

const TaskSummary* EvalReport::task(Task t) const noexcept {
  for (const auto& s : tasks) {
    if (s.task == t) return &s;
  }
  return nullptr;
}

TileScore score_tile(std::string id, const Mask& gt, const Mask& pred, const EvalConfig& config) {
  return {std::move(id), iou(gt, pred, config.empty_score), biou(gt, pred, config.biou_width, config.empty_score)};
}

EvalReport aggregate(std::span<const TileScore> task1, std::span<const TileScore> task2, const EvalConfig& config) {
  config.validate();
  if (task1.empty() && task2.empty()) throw DataError("nothing to aggregate");
  EvalReport report;
  report.config = config;
  auto summarize = [](Task task, std::span<const TileScore> tiles) {
    TaskSummary s;
    s.task = task;
    s.tiles.assign(tiles.begin(), tiles.end());
    double iou_sum = 0.0;
    double biou_sum = 0.0;
    for (const auto& t : tiles) {
      iou_sum += t.iou;
      biou_sum += t.biou;
    }
    s.mean_iou = iou_sum / static_cast<double>(tiles.size());
    s.mean_biou = biou_sum / static_cast<double>(tiles.size());
    s.total = (s.mean_iou + s.mean_biou) / 2.0;
    return s;
  };
  if (!task1.empty()) report.tasks.push_back(summarize(Task::kTask1, task1));
  if (!task2.empty()) report.tasks.push_back(summarize(Task::kTask2, task2));
  double totals = 0.0;
  for (const auto& s : report.tasks) totals += s.total;
  report.score = totals / static_cast<double>(report.tasks.size());
  return report;
}

}  // namespace mapseg
