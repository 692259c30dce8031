#include <cmath>

#include "mapseg/error.hpp"
#include "mapseg/file_util.hpp"
#include "mapseg/pipeline.hpp"
#include "toml.hpp"

namespace mapseg {

namespace fs = std::filesystem;

namespace {

template <typename T>
void read(const toml::table* table, std::string_view key, T& out) {
  if (!table) return;
  const toml::node* node = table->get(key);
  if (!node) return;
  if constexpr (std::is_same_v<T, bool>) {
    if (auto v = node->value<bool>()) {
      out = *v;
      return;
    }
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (auto v = node->value<std::string>()) {
      out = *v;
      return;
    }
  } else if constexpr (std::is_integral_v<T>) {
    if (auto v = node->value<std::int64_t>()) {
      out = static_cast<T>(*v);
      return;
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (auto v = node->value<double>()) {
      out = static_cast<T>(*v);
      return;
    }
  }
  throw ConfigError("config key '" + std::string(key) + "' has the wrong type");
}

const toml::table* sub(const toml::table* table, std::string_view key) {
  if (!table) return nullptr;
  const toml::node* node = table->get(key);
  if (!node) return nullptr;
  if (!node->is_table()) throw ConfigError("config key '" + std::string(key) + "' must be a table");
  return node->as_table();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : (base / path).lexically_normal();
}

void apply_learner(LearnerConfig& learner, const toml::table* model) {
  if (!model) return;
  std::string kind;
  read(model, "kind", kind);
  if (!kind.empty()) learner.kind = parse_learner_kind(kind);
  read(model, "threshold", learner.threshold);
  read(model, "max_bins", learner.max_bins);
  read(model, "seed", learner.seed);

  if (const auto* rf = sub(model, "rf")) {
    read(rf, "n_estimators", learner.rf.n_estimators);
    read(rf, "bootstrap", learner.rf.bootstrap);
    read(rf, "max_depth", learner.rf.max_depth);
    std::string rule;
    read(rf, "features_per_split", rule);
    if (rule == "sqrt") learner.rf.features_per_split = FeatureRule::kSqrt;
    else if (rule == "all") learner.rf.features_per_split = FeatureRule::kAll;
    else if (!rule.empty()) throw ConfigError("features_per_split must be 'sqrt' or 'all'");
  }
  if (const auto* g = sub(model, "gbdt")) {
    read(g, "colsample_bytree", learner.gbdt.colsample_bytree);
    read(g, "gamma", learner.gbdt.gamma);
    read(g, "max_depth", learner.gbdt.max_depth);
    read(g, "min_child_weight", learner.gbdt.min_child_weight);
    read(g, "reg_alpha", learner.gbdt.alpha);
    read(g, "reg_lambda", learner.gbdt.lambda);
    read(g, "learning_rate", learner.gbdt.learning_rate);
    read(g, "n_rounds", learner.gbdt.n_rounds);
  }
  if (const auto* l = sub(model, "lgbm")) {
    read(l, "learning_rate", learner.lgbm.learning_rate);
    read(l, "num_leaves", learner.lgbm.num_leaves);
    read(l, "max_depth", learner.lgbm.max_depth);
    read(l, "n_rounds", learner.lgbm.n_rounds);
    read(l, "reg_lambda", learner.lgbm.lambda);
    read(l, "reg_alpha", learner.lgbm.alpha);
    read(l, "gamma", learner.lgbm.gamma);
    read(l, "min_child_weight", learner.lgbm.min_child_weight);
    if (const toml::node* metrics = l->get("metrics")) {
      const auto* list = metrics->as_array();
      if (!list) throw ConfigError("lgbm metrics must be an array of strings");
      learner.lgbm.metrics.clear();
      for (const auto& m : *list) {
        auto name = m.value<std::string>();
        if (!name) throw ConfigError("lgbm metrics must be an array of strings");
        learner.lgbm.metrics.push_back(*name);
      }
    }
  }
}

toml::table parse_toml(std::string_view text, const std::string& source) {
  try {
    return toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError("cannot parse " + source + ": " + std::string(e.description()));
  }
}

}  // namespace

void RunConfig::validate() const {
  features.validate(task);
  learner.validate();
  eval.validate();
  if (manifest.empty()) throw ConfigError("no manifest given");
  if (!fs::exists(manifest)) throw ConfigError("manifest not found: " + manifest.string());
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
  StructuringElement se(kernel);
  (void)se;
}

void apply_run_config_toml_text(RunConfig& config, std::string_view text, const fs::path& base_dir) {
  const toml::table root = parse_toml(text, "run config");
  read(&root, "seed", config.learner.seed);

  if (const auto* data = sub(&root, "data")) {
    int task = static_cast<int>(config.task);
    read(data, "task", task);
    if (task != 1 && task != 2) throw ConfigError("task must be 1 or 2");
    const bool task_changed = static_cast<Task>(task) != config.task;
    config.task = static_cast<Task>(task);
    if (task_changed) config.features = FeatureSpec::defaults(config.task);
    std::string path;
    read(data, "manifest", path);
    if (!path.empty()) config.manifest = resolve(base_dir, path);
    path.clear();
    read(data, "out", path);
    if (!path.empty()) config.out_dir = resolve(base_dir, path);
    read(data, "train_fraction", config.train_fraction);
    if (data->get("lidar_fill")) {
      double fill = 0.0;
      read(data, "lidar_fill", fill);
      config.lidar_fill = static_cast<float>(fill);
    }
  }
  if (const auto* features = sub(&root, "features")) {
    std::string list;
    read(features, "spec", list);
    if (!list.empty()) {
      const FilterParams params = config.features.params;
      config.features = FeatureSpec::parse(list);
      config.features.params = params;
    }
    read(features, "boundary_mask", config.boundary_mask);
    read(features, "kernel", config.kernel);
    auto& p = config.features.params;
    if (const auto* clahe = sub(features, "clahe")) {
      read(clahe, "clip_limit", p.clahe.clip_limit);
      read(clahe, "tiles", p.clahe.tiles);
    }
    if (const auto* morph = sub(features, "morph")) read(morph, "kernel", p.morph.kernel);
    if (const auto* gabor = sub(features, "gabor")) {
      read(gabor, "orientations", p.gabor.orientations);
      read(gabor, "wavelength", p.gabor.wavelength);
      read(gabor, "sigma", p.gabor.sigma);
      read(gabor, "aspect", p.gabor.aspect);
    }
    if (const auto* canny = sub(features, "canny")) {
      read(canny, "low", p.canny.low);
      read(canny, "high", p.canny.high);
    }
  }
  apply_learner(config.learner, sub(&root, "model"));
  if (const auto* eval = sub(&root, "eval")) {
    read(eval, "biou_d", config.eval.biou_width);
    read(eval, "empty_score", config.eval.empty_score);
  }
  config.eval.threshold = config.learner.threshold;
}

void apply_run_config_toml(RunConfig& config, const fs::path& path) {
  apply_run_config_toml_text(config, read_file(path), path.parent_path());
}

void apply_learner_toml(LearnerConfig& learner, const fs::path& path) {
  const toml::table root = parse_toml(read_file(path), path.string());
  read(&root, "seed", learner.seed);
  apply_learner(learner, sub(&root, "model"));
}

}  // namespace mapseg
