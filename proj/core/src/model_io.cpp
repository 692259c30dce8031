#include <limits>

#include "json.hpp"
#include "mapseg/ensembles.hpp"
#include "mapseg/error.hpp"
#include "mapseg/file_util.hpp"

namespace mapseg {

namespace {

using nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

ordered_json config_to_json(const LearnerConfig& c) {
  ordered_json j;
  j["kind"] = learner_name(c.kind);
  j["seed"] = c.seed;
  j["threshold"] = c.threshold;
  j["max_bins"] = c.max_bins;
  switch (c.kind) {
    case LearnerKind::kRandomForest:
      j["n_estimators"] = c.rf.n_estimators;
      j["bootstrap"] = c.rf.bootstrap;
      j["features_per_split"] = c.rf.features_per_split == FeatureRule::kSqrt ? "sqrt" : "all";
      j["max_depth"] = c.rf.max_depth;
      break;
    case LearnerKind::kGbdt:
      j["colsample_bytree"] = c.gbdt.colsample_bytree;
      j["gamma"] = c.gbdt.gamma;
      j["max_depth"] = c.gbdt.max_depth;
      j["min_child_weight"] = c.gbdt.min_child_weight;
      j["reg_alpha"] = c.gbdt.alpha;
      j["reg_lambda"] = c.gbdt.lambda;
      j["learning_rate"] = c.gbdt.learning_rate;
      j["n_rounds"] = c.gbdt.n_rounds;
      break;
    case LearnerKind::kLgbm:
      j["learning_rate"] = c.lgbm.learning_rate;
      j["num_leaves"] = c.lgbm.num_leaves;
      j["max_depth"] = c.lgbm.max_depth;
      j["n_rounds"] = c.lgbm.n_rounds;
      j["reg_lambda"] = c.lgbm.lambda;
      j["reg_alpha"] = c.lgbm.alpha;
      j["gamma"] = c.lgbm.gamma;
      j["min_child_weight"] = c.lgbm.min_child_weight;
      j["metrics"] = c.lgbm.metrics;
      break;
  }
  return j;
}

LearnerConfig config_from_json(const ordered_json& j) {
  LearnerConfig c;
  c.kind = parse_learner_kind(j.at("kind").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.threshold = j.at("threshold").get<double>();
  c.max_bins = j.at("max_bins").get<int>();
  switch (c.kind) {
    case LearnerKind::kRandomForest:
      c.rf.n_estimators = j.at("n_estimators").get<int>();
      c.rf.bootstrap = j.at("bootstrap").get<bool>();
      c.rf.features_per_split = j.at("features_per_split").get<std::string>() == "all" ? FeatureRule::kAll
                                                                                      : FeatureRule::kSqrt;
      c.rf.max_depth = j.at("max_depth").get<int>();
      break;
    case LearnerKind::kGbdt:
      c.gbdt.colsample_bytree = j.at("colsample_bytree").get<double>();
      c.gbdt.gamma = j.at("gamma").get<double>();
      c.gbdt.max_depth = j.at("max_depth").get<int>();
      c.gbdt.min_child_weight = j.at("min_child_weight").get<double>();
      c.gbdt.alpha = j.at("reg_alpha").get<double>();
      c.gbdt.lambda = j.at("reg_lambda").get<double>();
      c.gbdt.learning_rate = j.at("learning_rate").get<double>();
      c.gbdt.n_rounds = j.at("n_rounds").get<int>();
      break;
    case LearnerKind::kLgbm:
      c.lgbm.learning_rate = j.at("learning_rate").get<double>();
      c.lgbm.num_leaves = j.at("num_leaves").get<int>();
      c.lgbm.max_depth = j.at("max_depth").get<int>();
      c.lgbm.n_rounds = j.at("n_rounds").get<int>();
      c.lgbm.lambda = j.at("reg_lambda").get<double>();
      c.lgbm.alpha = j.at("reg_alpha").get<double>();
      c.lgbm.gamma = j.at("gamma").get<double>();
      c.lgbm.min_child_weight = j.at("min_child_weight").get<double>();
      c.lgbm.metrics = j.at("metrics").get<std::vector<std::string>>();
      break;
  }
  return c;
}

}  // namespace

std::string model_to_json(const TrainedEnsemble& model) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = learner_name(model.kind);
  j["feature_names"] = model.feature_names;
  j["base_score"] = model.base_score;
  j["learning_rate"] = model.learning_rate;
  j["threshold"] = model.threshold;
  ordered_json trees = ordered_json::array();
  for (const auto& tree : model.trees) {
    ordered_json nodes = ordered_json::array();
    for (const auto& n : tree.nodes()) {
      ordered_json node;
      if (n.is_leaf()) {
        node["leaf"] = n.value;
      } else {
        node["f"] = n.feature;
        node["t"] = n.threshold;
        node["l"] = n.left;
        node["r"] = n.right;
        node["gain"] = n.gain;
      }
      node["cover"] = n.cover;
      nodes.push_back(std::move(node));
    }
    trees.push_back(ordered_json{{"nodes", std::move(nodes)}});
  }
  j["trees"] = std::move(trees);
  j["config"] = config_to_json(model.config);
  ordered_json trace = ordered_json::object();
  for (const auto& t : model.metric_trace) trace[t.name] = t.values;
  j["metric_trace"] = std::move(trace);
  return j.dump(1) + "\n";
}

TrainedEnsemble model_from_json(std::string_view text) {
  TrainedEnsemble model;
  try {
    const auto j = ordered_json::parse(text);
    const int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion) throw DataError("unsupported model schema_version " + std::to_string(version));
    model.kind = parse_learner_kind(j.at("kind").get<std::string>());
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.base_score = j.at("base_score").get<double>();
    model.learning_rate = j.at("learning_rate").get<double>();
    model.threshold = j.at("threshold").get<double>();
    for (const auto& t : j.at("trees")) {
      std::vector<TreeNode> nodes;
      for (const auto& n : t.at("nodes")) {
        TreeNode node;
        if (n.contains("leaf")) {
          node.value = n.at("leaf").get<double>();
        } else {
          node.feature = n.at("f").get<int>();
          node.threshold = n.at("t").get<double>();
          node.left = n.at("l").get<int>();
          node.right = n.at("r").get<int>();
          node.gain = n.at("gain").get<double>();
        }
        node.cover = n.at("cover").get<double>();
        nodes.push_back(node);
      }
      const int count = static_cast<int>(nodes.size());
      if (count == 0) throw DataError("model contains an empty tree");
      for (int i = 0; i < count; ++i) {
        const auto& n = nodes[static_cast<std::size_t>(i)];
        if (n.is_leaf()) continue;
        if (n.feature >= static_cast<int>(model.feature_names.size()) || n.left <= i || n.right <= i ||
            n.left >= count || n.right >= count) {
          throw DataError("malformed tree node " + std::to_string(i));
        }
      }
      model.trees.emplace_back(std::move(nodes));
    }
    model.config = config_from_json(j.at("config"));
    for (const auto& [name, values] : j.at("metric_trace").items()) {
      model.metric_trace.push_back({name, values.get<std::vector<double>>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
  return model;
}

void save_model(const TrainedEnsemble& model, const std::filesystem::path& path) {
  write_file_atomic(path, model_to_json(model));
}

TrainedEnsemble load_model(const std::filesystem::path& path) { return model_from_json(read_file(path)); }

}  // namespace mapseg
