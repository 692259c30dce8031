#include "mapseg/report.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "mapseg/error.hpp"

namespace mapseg {

using nlohmann::ordered_json;

std::string report_to_json(const EvalReport& report, const RunLabel& label) {
  ordered_json j;
  j["classifier"] = label.classifier;
  j["features"] = label.features;
  j["images"] = label.images;
  j["bmask"] = label.boundary_mask;
  j["config"] = {{"biou_d", report.config.biou_width},
                 {"empty_score", report.config.empty_score},
                 {"threshold", report.config.threshold}};
  ordered_json tasks = ordered_json::array();
  for (const auto& s : report.tasks) {
    ordered_json t;
    t["task"] = static_cast<int>(s.task);
    t["mean_iou"] = s.mean_iou;
    t["mean_biou"] = s.mean_biou;
    t["total"] = s.total;
    ordered_json tiles = ordered_json::array();
    for (const auto& tile : s.tiles) tiles.push_back({{"id", tile.id}, {"iou", tile.iou}, {"biou", tile.biou}});
    t["tiles"] = std::move(tiles);
    tasks.push_back(std::move(t));
  }
  j["tasks"] = std::move(tasks);
  j["score"] = report.score;
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  EvalReport report;
  try {
    const auto j = ordered_json::parse(text);
    report.config.biou_width = j.at("config").at("biou_d").get<int>();
    report.config.empty_score = j.at("config").at("empty_score").get<double>();
    report.config.threshold = j.at("config").at("threshold").get<double>();
    for (const auto& t : j.at("tasks")) {
      TaskSummary s;
      s.task = static_cast<Task>(t.at("task").get<int>());
      s.mean_iou = t.at("mean_iou").get<double>();
      s.mean_biou = t.at("mean_biou").get<double>();
      s.total = t.at("total").get<double>();
      for (const auto& tile : t.at("tiles")) {
        s.tiles.push_back({tile.at("id").get<std::string>(), tile.at("iou").get<double>(),
                           tile.at("biou").get<double>()});
      }
      report.tasks.push_back(std::move(s));
    }
    report.score = j.at("score").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  return report;
}

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

std::string rstrip_lines(const std::string& text) {
  std::string out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    line.erase(line.find_last_not_of(' ') + 1);
    out += line + "\n";
  }
  return out;
}

}  // namespace

std::string report_table(const EvalReport& report, const RunLabel& label) {
  std::ostringstream out;
  out << pad("Classifier", 12) << pad("Features", 26) << pad("Images", 8) << pad("BMask", 7);
  for (const auto& s : report.tasks) {
    const std::string task = "T" + std::to_string(static_cast<int>(s.task));
    out << pad(task + " IoU", 10) << pad(task + " BIoU", 10);
  }
  out << "\n";
  out << pad(label.classifier, 12) << pad(label.features, 26) << pad(std::to_string(label.images), 8)
      << pad(label.boundary_mask ? "Yes" : "No", 7);
  for (const auto& s : report.tasks) out << pad(fixed4(s.mean_iou), 10) << pad(fixed4(s.mean_biou), 10);
  out << "\n\n";

  out << pad("Classifier", 12);
  for (const auto& s : report.tasks) {
    const std::string task = "T" + std::to_string(static_cast<int>(s.task));
    out << pad(task + " IoU", 10) << pad(task + " BIoU", 10) << pad(task + " Total", 10);
  }
  out << "Score\n";
  out << pad(label.classifier, 12);
  for (const auto& s : report.tasks) {
    out << pad(fixed4(s.mean_iou), 10) << pad(fixed4(s.mean_biou), 10) << pad(fixed4(s.total), 10);
  }
  out << fixed4(report.score) << "\n";
  return rstrip_lines(out.str());
}

}  // namespace mapseg
