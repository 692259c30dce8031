#include "mapseg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mapseg/design_matrix.hpp"
#include "mapseg/error.hpp"
#include "mapseg/file_util.hpp"
#include "mapseg/parallel.hpp"

namespace mapseg {

namespace fs = std::filesystem;

std::pair<DatasetManifest, DatasetManifest> split_manifest(const DatasetManifest& manifest, double train_fraction) {
  const auto n = static_cast<long>(manifest.entries.size());
  if (n < 2) throw DataError("need at least two tiles to hold one out");
  const long n_train =
      std::clamp(std::lround(train_fraction * static_cast<double>(n)), 1L, n - 1);
  DatasetManifest train{{manifest.entries.begin(), manifest.entries.begin() + n_train}, manifest.task};
  DatasetManifest test{{manifest.entries.begin() + n_train, manifest.entries.end()}, manifest.task};
  return {std::move(train), std::move(test)};
}

std::vector<Tile> load_tiles(const DatasetManifest& manifest, const LoadOptions& options) {
  std::vector<Tile> tiles(manifest.entries.size());
  parallel_for(tiles.size(), [&](std::size_t i) { tiles[i] = load_tile(manifest.entries[i], options); });
  return tiles;
}

FeatureSpec spec_from_names(const std::vector<std::string>& names) {
  std::string list;
  for (const auto& n : names) {
    if (!list.empty()) list += ',';
    list += n;
  }
  return FeatureSpec::parse(list);
}

void predict_to_dir(const TrainedEnsemble& model, const DatasetManifest& manifest, const fs::path& out_dir,
                    double threshold, const LoadOptions& options) {
  const FeatureSpec spec = spec_from_names(model.feature_names);
  parallel_for(manifest.entries.size(), [&](std::size_t i) {
    const Tile tile = load_tile(manifest.entries[i], options);
    const auto rows = tile_feature_rows(tile, spec);
    const auto prediction = predict_mask(model, rows, tile.rows(), tile.cols(), threshold);
    save_mask(prediction.mask, out_dir / (tile.id + ".png"));
  });
}

std::vector<TileScore> score_dirs(const fs::path& pred_dir, const fs::path& gt_dir, const EvalConfig& config) {
  config.validate();
  if (!fs::is_directory(pred_dir)) throw ConfigError("prediction directory not found: " + pred_dir.string());
  if (!fs::is_directory(gt_dir)) throw ConfigError("ground-truth directory not found: " + gt_dir.string());
  // keyed by tile id so the order matches a manifest sorted by id
  std::map<std::string, fs::path> files;
  for (const auto& item : fs::directory_iterator(pred_dir)) {
    const auto ext = item.path().extension().string();
    if (item.is_regular_file() && (ext == ".png" || ext == ".tif" || ext == ".tiff")) {
      if (!files.emplace(item.path().stem().string(), item.path().filename()).second) {
        throw DataError("duplicate predicted mask for tile " + item.path().stem().string());
      }
    }
  }
  if (files.empty()) throw DataError("no predicted masks in " + pred_dir.string());
  const std::vector<std::pair<std::string, fs::path>> names(files.begin(), files.end());
  std::vector<TileScore> scores(names.size());
  parallel_for(names.size(), [&](std::size_t i) {
    const auto& [id, file] = names[i];
    const fs::path gt_path = gt_dir / file;
    if (!fs::exists(gt_path)) throw DataError("no ground truth for " + file.string());
    scores[i] = score_tile(id, load_mask(gt_path), load_mask(pred_dir / file), config);
  });
  return scores;
}

EvalReport report_for_task(Task task, std::span<const TileScore> scores, const EvalConfig& config) {
  return task == Task::kTask1 ? aggregate(scores, {}, config) : aggregate({}, scores, config);
}

namespace {

class Stage {
 public:
  Stage(const fs::path& out_dir, std::string name) : out_dir_(out_dir), name_(std::move(name)) {}

  template <typename F>
  auto run(F&& body) {
    try {
      return body();
    } catch (const ConfigError& e) {
      mark();
      throw ConfigError(prefix() + e.what());
    } catch (const DivergenceError& e) {
      mark();
      throw DivergenceError(prefix() + e.what(), e.round());
    } catch (const DataError& e) {
      mark();
      throw DataError(prefix() + e.what());
    } catch (const std::exception& e) {
      mark();
      throw DataError(prefix() + e.what());
    }
  }

 private:
  std::string prefix() const { return "stage " + name_ + ": "; }
  void mark() const noexcept {
    try {
      write_file_atomic(out_dir_ / "FAILED", "stage " + name_ + " failed; artifacts in this directory are partial\n");
    } catch (...) {
    }
  }
  const fs::path& out_dir_;
  std::string name_;
};

}  // namespace

PipelineResult run_pipeline(const RunConfig& config) {
  config.validate();
  const fs::path& out = config.out_dir;
  std::error_code ec;
  fs::create_directories(out / "pred", ec);
  if (ec) throw DataError("cannot create output directory " + out.string());
  fs::remove(out / "FAILED", ec);
  const LoadOptions load_options{config.lidar_fill};

  PipelineResult result;
  DatasetManifest train_manifest;
  DatasetManifest test_manifest;
  FeatureMatrix matrix;
  Stage(out, "preprocess").run([&] {
    DatasetManifest manifest = load_manifest(config.manifest);
    manifest.task = config.task;
    validate_manifest(manifest);
    std::tie(train_manifest, test_manifest) = split_manifest(manifest, config.train_fraction);
    save_manifest(train_manifest, out / "train_manifest.json");
    save_manifest(test_manifest, out / "test_manifest.json");
    const auto tiles = load_tiles(train_manifest, load_options);
    matrix = assemble_design_matrix(tiles, config.features, config.boundary_mask, StructuringElement(config.kernel));
    save_matrix(matrix, out / "matrix.bin");
    return 0;
  });

  Stage(out, "train").run([&] {
    result.model = train(matrix, config.learner);
    save_model(result.model, out / "model.json");
    return 0;
  });

  Stage(out, "predict").run([&] {
    predict_to_dir(result.model, test_manifest, out / "pred", config.learner.threshold, load_options);
    return 0;
  });

  result.label = {std::string(learner_name(config.learner.kind)), config.features.to_string(),
                  train_manifest.entries.size(), config.boundary_mask};
  Stage(out, "evaluate").run([&] {
    EvalConfig eval = config.eval;
    eval.threshold = config.learner.threshold;
    auto score_manifest = [&](const DatasetManifest& manifest, const fs::path* pred_dir) {
      std::vector<ManifestEntry> entries = manifest.entries;
      std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
      std::vector<TileScore> scores(entries.size());
      const FeatureSpec spec = spec_from_names(result.model.feature_names);
      parallel_for(entries.size(), [&](std::size_t i) {
        const auto& entry = entries[i];
        if (!entry.mask) throw DataError("tile " + entry.id + " has no ground-truth mask");
        const Mask gt = load_mask(*entry.mask);
        Mask pred;
        if (pred_dir) {
          pred = load_mask(*pred_dir / (entry.id + ".png"));
        } else {
          const Tile tile = load_tile(entry, load_options);
          pred = predict_tile(result.model, tile, spec).mask;
        }
        scores[i] = score_tile(entry.id, gt, pred, eval);
      });
      return report_for_task(config.task, scores, eval);
    };
    const fs::path pred_dir = out / "pred";
    result.test_report = score_manifest(test_manifest, &pred_dir);
    result.train_report = score_manifest(train_manifest, nullptr);
    write_file_atomic(out / "report.json", report_to_json(result.test_report, result.label));
    write_file_atomic(out / "report.txt", report_table(result.test_report, result.label));
    write_file_atomic(out / "train_report.json", report_to_json(result.train_report, result.label));
    return 0;
  });
  return result;
}

}  // namespace mapseg
