#pragma once

#include <cstddef>
#include <string>

#include "mapseg/metrics.hpp"

namespace mapseg {

// Descriptive columns of a results table row.
struct RunLabel {
  std::string classifier = "-";
  std::string features = "-";
  std::size_t images = 0;
  bool boundary_mask = false;
};

std::string report_to_json(const EvalReport& report, const RunLabel& label);
EvalReport report_from_json(const std::string& text);

// Aligned plain-text tables: Classifier/Features/Images/BMask/IoU/BIoU per
// task, then per-task totals and the overall score.
std::string report_table(const EvalReport& report, const RunLabel& label);

}  // namespace mapseg
