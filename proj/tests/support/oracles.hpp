#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "mapseg/raster.hpp"

namespace mapseg::testing {

inline Mask random_mask(std::mt19937_64& rng, int rows, int cols, double density) {
  std::bernoulli_distribution on(density);
  Mask m(rows, cols);
  for (auto& v : m.values()) v = on(rng) ? 1 : 0;
  return m;
}

// Union of random filled rectangles; gives masks with real interiors.
inline Mask random_blocks(std::mt19937_64& rng, int rows, int cols, int count) {
  Mask m(rows, cols);
  std::uniform_int_distribution<int> pr(0, rows - 1), pc(0, cols - 1), len(1, std::max(2, rows / 2));
  for (int i = 0; i < count; ++i) {
    const int r0 = pr(rng), c0 = pc(rng), h = len(rng), w = len(rng);
    for (int r = r0; r < std::min(rows, r0 + h); ++r)
      for (int c = c0; c < std::min(cols, c0 + w); ++c) m(r, c) = 1;
  }
  return m;
}

inline Mask filled_rect(int rows, int cols, int r0, int c0, int h, int w) {
  Mask m(rows, cols);
  for (int r = r0; r < r0 + h; ++r)
    for (int c = c0; c < c0 + w; ++c) m(r, c) = 1;
  return m;
}

// Window scan with outside pixels as background.
inline Mask naive_erode(const Mask& m, int k) {
  const int rad = k / 2;
  Mask out(m.rows(), m.cols());
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      bool all = true;
      for (int dr = -rad; dr <= rad && all; ++dr) {
        for (int dc = -rad; dc <= rad && all; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= m.rows() || cc >= m.cols() || !m(rr, cc)) all = false;
        }
      }
      out(r, c) = all ? 1 : 0;
    }
  }
  return out;
}

inline std::set<std::pair<int, int>> pixel_set(const Mask& m) {
  std::set<std::pair<int, int>> s;
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c)
      if (m(r, c)) s.emplace(r, c);
  return s;
}

inline double set_iou(const std::set<std::pair<int, int>>& a, const std::set<std::pair<int, int>>& b,
                      double empty_score = 1.0) {
  std::vector<std::pair<int, int>> inter, uni;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
  if (uni.empty()) return empty_score;
  return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

// Band pixels: mask pixels within Chebyshev distance d of a pixel outside
// the mask or outside the image.
inline std::set<std::pair<int, int>> band_set(const Mask& m, int d) {
  std::set<std::pair<int, int>> s;
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (!m(r, c)) continue;
      bool near = false;
      for (int dr = -d; dr <= d && !near; ++dr) {
        for (int dc = -d; dc <= d && !near; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= m.rows() || cc >= m.cols() || !m(rr, cc)) near = true;
        }
      }
      if (near) s.emplace(r, c);
    }
  }
  return s;
}

// Per-process, so parallel ctest runs never share a directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("mapseg_test_" + name + "_" + std::to_string(static_cast<long>(::getpid())));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace mapseg::testing
