#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mapseg/ensembles.hpp"
#include "mapseg/features.hpp"
#include "mapseg/metrics.hpp"
#include "mapseg/raster_io.hpp"
#include "mapseg/report.hpp"

namespace mapseg {

struct RunConfig {
  Task task = Task::kTask2;
  std::filesystem::path manifest;
  FeatureSpec features = FeatureSpec::defaults(Task::kTask2);
  LearnerConfig learner;
  EvalConfig eval;
  bool boundary_mask = false;
  int kernel = kBoundaryKernel;
  std::filesystem::path out_dir = "mapseg-run";
  double train_fraction = 0.8;  // leading tiles train, the rest are held out
  std::optional<float> lidar_fill;

  std::uint64_t seed() const noexcept { return learner.seed; }
  // Throws ConfigError on inconsistent settings.
  void validate() const;
};

// TOML with [data], [features], [model] (plus [model.rf], [model.gbdt],
// [model.lgbm]) and [eval] sections and a top-level seed. Relative paths
// resolve against the config file's directory. Keys absent from the file
// keep the values already in `config`.
void apply_run_config_toml(RunConfig& config, const std::filesystem::path& path);
void apply_run_config_toml_text(RunConfig& config, std::string_view text, const std::filesystem::path& base_dir);

// Applies only the [model] tables, for commands that just train.
void apply_learner_toml(LearnerConfig& learner, const std::filesystem::path& path);

// Leading round(fraction * n) entries, clamped so both sides are non-empty.
std::pair<DatasetManifest, DatasetManifest> split_manifest(const DatasetManifest& manifest, double train_fraction);

std::vector<Tile> load_tiles(const DatasetManifest& manifest, const LoadOptions& options = {});

// Builds a feature spec from a trained model's column names.
FeatureSpec spec_from_names(const std::vector<std::string>& names);

// Predicts every tile of the manifest and writes <out_dir>/<id>.png.
void predict_to_dir(const TrainedEnsemble& model, const DatasetManifest& manifest,
                    const std::filesystem::path& out_dir, double threshold, const LoadOptions& options = {});

// Scores every PNG/TIFF in pred_dir against the same file name in gt_dir,
// in tile-id order.
std::vector<TileScore> score_dirs(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                                  const EvalConfig& config);

EvalReport report_for_task(Task task, std::span<const TileScore> scores, const EvalConfig& config);

struct PipelineResult {
  EvalReport test_report;
  EvalReport train_report;
  RunLabel label;
  TrainedEnsemble model;
};

// preprocess -> (boundary duplication) -> train -> store model -> predict
// held-out tiles -> evaluate. Writes train_manifest.json, test_manifest.json,
// matrix.bin, model.json, pred/<id>.png, report.json, report.txt and
// train_report.json under out_dir. A failing stage leaves a FAILED marker
// naming the stage and rethrows with the stage name prefixed.
PipelineResult run_pipeline(const RunConfig& config);

}  // namespace mapseg
