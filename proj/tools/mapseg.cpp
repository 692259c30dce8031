#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mapseg/design_matrix.hpp"
#include "mapseg/ensembles.hpp"
#include "mapseg/error.hpp"
#include "mapseg/file_util.hpp"
#include "mapseg/morphology.hpp"
#include "mapseg/pipeline.hpp"
#include "mapseg/raster_io.hpp"
#include "mapseg/report.hpp"
#include "mapseg/synth.hpp"

namespace fs = std::filesystem;
using namespace mapseg;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kDivergence = 4 };

// Options shared by several subcommands. Unset flags leave the config
// file (or built-in default) in place.
struct Overrides {
  std::optional<fs::path> config;
  std::optional<int> task;
  std::optional<fs::path> manifest;
  std::optional<std::string> spec;
  bool boundary_mask = false;
  std::optional<int> kernel;
  std::optional<std::string> classifier;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
  std::optional<int> max_bins;
  std::optional<int> biou_d;
  std::optional<double> empty_score;
  std::optional<double> train_fraction;
  std::optional<float> lidar_fill;
  std::optional<fs::path> out;
};

Task to_task(int value) {
  if (value != 1 && value != 2) throw ConfigError("--task must be 1 or 2");
  return static_cast<Task>(value);
}

RunConfig resolve(const Overrides& o) {
  RunConfig config;
  if (o.config) apply_run_config_toml(config, *o.config);
  if (o.task) {
    config.task = to_task(*o.task);
    if (!o.spec) {
      const FilterParams params = config.features.params;
      config.features = FeatureSpec::defaults(config.task);
      config.features.params = params;
    }
  }
  if (o.manifest) config.manifest = *o.manifest;
  if (o.spec) {
    const FilterParams params = config.features.params;
    config.features = FeatureSpec::parse(*o.spec);
    config.features.params = params;
  }
  if (o.boundary_mask) config.boundary_mask = true;
  if (o.kernel) config.kernel = *o.kernel;
  if (o.classifier) config.learner.kind = parse_learner_kind(*o.classifier);
  if (o.seed) config.learner.seed = *o.seed;
  if (o.threshold) config.learner.threshold = *o.threshold;
  if (o.max_bins) config.learner.max_bins = *o.max_bins;
  if (o.biou_d) config.eval.biou_width = *o.biou_d;
  if (o.empty_score) config.eval.empty_score = *o.empty_score;
  if (o.train_fraction) config.train_fraction = *o.train_fraction;
  if (o.lidar_fill) config.lidar_fill = *o.lidar_fill;
  if (o.out) config.out_dir = *o.out;
  config.eval.threshold = config.learner.threshold;
  return config;
}

void add_config(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "TOML experiment file")->check(CLI::ExistingFile);
}

void add_feature_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--task", o.task, "1 (aerial only) or 2 (aerial + lidar)");
  cmd->add_option("--spec", o.spec, "comma-separated features, e.g. blue,green,red,gray,lidar");
  cmd->add_flag("--boundary-mask", o.boundary_mask, "duplicate rows with boundary-mask labels");
  cmd->add_option("--kernel", o.kernel, "boundary structuring element size");
}

void add_learner_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--classifier", o.classifier, "rf, gbdt or lgbm");
  cmd->add_option("--threshold", o.threshold, "probability cut for a building pixel");
  cmd->add_option("--max-bins", o.max_bins, "histogram bins per feature");
}

void add_eval_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--biou-d", o.biou_d, "boundary band width in pixels");
  cmd->add_option("--empty-score", o.empty_score, "score when both masks are empty");
}

void print_report(const EvalReport& report, const RunLabel& label) { std::cout << report_table(report, label); }

int cmd_synth(const SynthSpec& spec, const fs::path& out) {
  const auto manifest = synth_dataset(spec, out);
  std::cout << "wrote " << manifest.entries.size() << " tiles to " << out.string() << "\n";
  return kOk;
}

int cmd_features(const Overrides& o) {
  RunConfig config = resolve(o);
  if (config.manifest.empty()) throw ConfigError("--manifest is required");
  DatasetManifest manifest = load_manifest(config.manifest);
  if (!o.task) {
    config.task = manifest.task;
    if (!o.spec && !o.config) config.features = FeatureSpec::defaults(config.task);
  }
  manifest.task = config.task;
  config.features.validate(config.task);
  validate_manifest(manifest);
  const auto tiles = load_tiles(manifest, {config.lidar_fill});
  const auto matrix =
      assemble_design_matrix(tiles, config.features, config.boundary_mask, StructuringElement(config.kernel));
  const fs::path out = o.out ? *o.out : fs::path("matrix.bin");
  save_matrix(matrix, out);
  std::cout << "wrote " << matrix.num_rows() << " rows x " << matrix.columns.size() << " features to " << out.string()
            << "\n";
  return kOk;
}

int cmd_boundary_mask(const fs::path& in, const fs::path& out, int kernel) {
  const StructuringElement se(kernel);
  if (!fs::is_directory(in)) throw ConfigError("input directory not found: " + in.string());
  fs::create_directories(out);
  std::size_t count = 0;
  std::vector<fs::path> files;
  for (const auto& item : fs::directory_iterator(in)) {
    if (item.is_regular_file() && item.path().extension() == ".png") files.push_back(item.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    save_mask(boundary_mask(load_mask(file), se), out / file.filename());
    ++count;
  }
  std::cout << "wrote " << count << " boundary masks to " << out.string() << "\n";
  return kOk;
}

int cmd_train(const Overrides& o, const fs::path& matrix_path) {
  const RunConfig config = resolve(o);
  config.learner.validate();
  const FeatureMatrix matrix = load_matrix(matrix_path);
  const TrainedEnsemble model = train(matrix, config.learner);
  const fs::path out = o.out ? *o.out : fs::path("model.json");
  save_model(model, out);
  std::cout << "trained " << learner_name(model.kind) << " with " << model.trees.size() << " trees; wrote "
            << out.string() << "\n";
  return kOk;
}

int cmd_predict(const Overrides& o, const fs::path& model_path) {
  const RunConfig config = resolve(o);
  if (config.manifest.empty()) throw ConfigError("--manifest is required");
  if (!o.out) throw ConfigError("--out is required");
  const TrainedEnsemble model = load_model(model_path);
  const DatasetManifest manifest = load_manifest(config.manifest);
  fs::create_directories(*o.out);
  const double threshold = o.threshold ? *o.threshold : model.threshold;
  predict_to_dir(model, manifest, *o.out, threshold, {config.lidar_fill});
  std::cout << "wrote " << manifest.entries.size() << " masks to " << o.out->string() << "\n";
  return kOk;
}

int cmd_eval(const Overrides& o, const fs::path& pred, const fs::path& gt, const std::optional<fs::path>& model_path,
             std::size_t images) {
  RunConfig config = resolve(o);
  RunLabel label;
  label.images = images;
  label.boundary_mask = config.boundary_mask;
  if (model_path) {
    const TrainedEnsemble model = load_model(*model_path);
    label.classifier = std::string(learner_name(model.kind));
    label.features = spec_from_names(model.feature_names).to_string();
    if (!o.threshold) config.eval.threshold = model.threshold;
  }
  const auto scores = score_dirs(pred, gt, config.eval);
  const EvalReport report = report_for_task(config.task, scores, config.eval);
  if (o.out) {
    write_file_atomic(*o.out, report_to_json(report, label));
    fs::path table = *o.out;
    table.replace_extension(".txt");
    write_file_atomic(table, report_table(report, label));
  }
  print_report(report, label);
  return kOk;
}

int cmd_run(const Overrides& o) {
  const RunConfig config = resolve(o);
  const PipelineResult result = run_pipeline(config);
  print_report(result.test_report, result.label);
  std::cout << "artifacts in " << config.out_dir.string() << "\n";
  return kOk;
}

int cmd_importance(const fs::path& model_path, const std::optional<fs::path>& out) {
  const TrainedEnsemble model = load_model(model_path);
  const auto ranked = feature_importance(model);
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& [name, weight] : ranked) {
    doc.push_back({{"feature", name}, {"importance", weight}});
    std::cout << std::left << std::setw(10) << name << std::fixed << std::setprecision(6) << weight << "\n";
  }
  if (out) write_file_atomic(*out, doc.dump(2) + "\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Building segmentation from aerial imagery and LiDAR with tree ensembles"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mapseg 0.1.0");

  Overrides o;

  SynthSpec synth;
  fs::path synth_out;
  bool no_shadows = false;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic aerial + lidar dataset");
  synth_cmd->add_option("--seed", synth.seed)->required();
  synth_cmd->add_option("--out", synth_out)->required();
  synth_cmd->add_option("--tiles", synth.tiles)->capture_default_str();
  synth_cmd->add_option("--size", synth.tile_size)->capture_default_str();
  synth_cmd->add_option("--min-buildings", synth.min_buildings)->capture_default_str();
  synth_cmd->add_option("--max-buildings", synth.max_buildings)->capture_default_str();
  synth_cmd->add_option("--min-height", synth.min_height)->capture_default_str();
  synth_cmd->add_option("--max-height", synth.max_height)->capture_default_str();
  synth_cmd->add_option("--noise-sigma", synth.noise_sigma)->capture_default_str();
  synth_cmd->add_flag("--no-shadows", no_shadows);

  auto* features_cmd = app.add_subcommand("features", "extract a design matrix from a manifest");
  add_config(features_cmd, o);
  features_cmd->add_option("--manifest", o.manifest);
  add_feature_flags(features_cmd, o);
  features_cmd->add_option("--out", o.out, "matrix file (default matrix.bin)");

  fs::path bm_in, bm_out;
  int bm_kernel = kBoundaryKernel;
  auto* bm_cmd = app.add_subcommand("boundary-mask", "write boundary masks for a directory of masks");
  bm_cmd->add_option("--in", bm_in)->required();
  bm_cmd->add_option("--out", bm_out)->required();
  bm_cmd->add_option("--kernel", bm_kernel)->capture_default_str();

  fs::path matrix_path;
  auto* train_cmd = app.add_subcommand("train", "train an ensemble on a design matrix");
  add_config(train_cmd, o);
  train_cmd->add_option("--matrix", matrix_path)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", o.seed)->required();
  add_learner_flags(train_cmd, o);
  train_cmd->add_option("--out", o.out, "model file (default model.json)");

  fs::path model_path;
  auto* predict_cmd = app.add_subcommand("predict", "predict masks for every tile of a manifest");
  add_config(predict_cmd, o);
  predict_cmd->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--manifest", o.manifest);
  predict_cmd->add_option("--threshold", o.threshold);
  predict_cmd->add_option("--out", o.out, "directory for predicted masks");

  fs::path eval_pred, eval_gt;
  std::optional<fs::path> eval_model;
  std::size_t eval_images = 0;
  auto* eval_cmd = app.add_subcommand("eval", "score predicted masks against ground truth");
  add_config(eval_cmd, o);
  eval_cmd->add_option("--pred", eval_pred)->required();
  eval_cmd->add_option("--gt", eval_gt)->required();
  eval_cmd->add_option("--task", o.task);
  add_eval_flags(eval_cmd, o);
  eval_cmd->add_option("--model", eval_model, "model file, labels the report")->check(CLI::ExistingFile);
  eval_cmd->add_option("--images", eval_images, "training image count, labels the report");
  eval_cmd->add_flag("--boundary-mask", o.boundary_mask, "labels the report");
  eval_cmd->add_option("--threshold", o.threshold);
  eval_cmd->add_option("--out", o.out, "report JSON; a .txt table is written beside it");

  auto* run_cmd = app.add_subcommand("run", "preprocess, train, predict and evaluate in one go");
  add_config(run_cmd, o);
  run_cmd->add_option("--manifest", o.manifest);
  add_feature_flags(run_cmd, o);
  add_learner_flags(run_cmd, o);
  add_eval_flags(run_cmd, o);
  run_cmd->add_option("--seed", o.seed);
  run_cmd->add_option("--train-fraction", o.train_fraction);
  run_cmd->add_option("--lidar-fill", o.lidar_fill, "replacement for non-finite lidar values");
  run_cmd->add_option("--out", o.out, "output directory");

  std::optional<fs::path> importance_out;
  auto* importance_cmd = app.add_subcommand("importance", "rank features by split gain");
  importance_cmd->add_option("--model", model_path)->required()->check(CLI::ExistingFile);
  importance_cmd->add_option("--out", importance_out, "JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*synth_cmd) {
      synth.shadows = !no_shadows;
      return cmd_synth(synth, synth_out);
    }
    if (*features_cmd) return cmd_features(o);
    if (*bm_cmd) return cmd_boundary_mask(bm_in, bm_out, bm_kernel);
    if (*train_cmd) return cmd_train(o, matrix_path);
    if (*predict_cmd) return cmd_predict(o, model_path);
    if (*eval_cmd) return cmd_eval(o, eval_pred, eval_gt, eval_model, eval_images);
    if (*run_cmd) return cmd_run(o);
    if (*importance_cmd) return cmd_importance(model_path, importance_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "training diverged at round " << e.round() << ": " << e.what() << "\n";
    return kDivergence;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return kConfig;
}
