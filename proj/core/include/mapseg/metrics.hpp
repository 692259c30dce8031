#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mapseg/raster.hpp"
#include "mapseg/raster_io.hpp"

namespace mapseg {

struct EvalConfig {
  int biou_width = 3;         // band thickness d in pixels
  double empty_score = 1.0;   // score when both compared sets are empty
  double threshold = 0.5;     // echoed into reports

  void validate() const;
};

// |gt & pred| / (|gt| + |pred| - |gt & pred|). Throws DataError on a shape mismatch.
double iou(const Mask& gt, const Mask& pred, double empty_score = 1.0);

// IoU of the inner bands of width d of both masks.
double biou(const Mask& gt, const Mask& pred, int d, double empty_score = 1.0);

inline constexpr double kLoglossClamp = 1e-7;

// Mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7].
double binary_logloss(std::span<const double> probabilities, std::span<const std::uint8_t> labels);

// Mann-Whitney AUC with ties counted as one half. Throws DataError unless both
// classes are present.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct TileScore {
  std::string id;
  double iou = 0.0;
  double biou = 0.0;
};

struct TaskSummary {
  Task task = Task::kTask1;
  std::vector<TileScore> tiles;
  double mean_iou = 0.0;
  double mean_biou = 0.0;
  double total = 0.0;  // (mean IoU + mean BIoU) / 2
};

struct EvalReport {
  std::vector<TaskSummary> tasks;
  double score = 0.0;  // mean of task totals
  EvalConfig config;

  const TaskSummary* task(Task t) const noexcept;
};

TileScore score_tile(std::string id, const Mask& gt, const Mask& pred, const EvalConfig& config);

// An empty span means the task was not evaluated. Throws DataError when both are empty.
EvalReport aggregate(std::span<const TileScore> task1, std::span<const TileScore> task2, const EvalConfig& config);

}  // namespace mapseg
