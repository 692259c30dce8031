#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "mapseg/raster.hpp"
#include "mapseg/raster_io.hpp"

namespace mapseg {

enum class FeatureKind { kBlue, kGreen, kRed, kGray, kLidar, kHistEq, kClahe, kMorph, kGabor, kCanny };

std::string_view feature_name(FeatureKind kind) noexcept;
// Throws ConfigError for unknown names.
FeatureKind parse_feature_kind(std::string_view name);

struct ClaheParams {
  double clip_limit = 2.0;
  int tiles = 8;
};

struct MorphParams {
  int kernel = 3;  // grayscale opening, square window
};

struct GaborParams {
  int orientations = 4;  // evenly spaced over [0, 180) degrees
  double wavelength = 8.0;
  double sigma = 4.0;
  double aspect = 0.5;
};

struct CannyParams {
  double low = 50.0;
  double high = 150.0;
};

struct FilterParams {
  ClaheParams clahe;
  MorphParams morph;
  GaborParams gabor;
  CannyParams canny;
};

// Ordered, duplicate-free list of per-pixel features.
struct FeatureSpec {
  std::vector<FeatureKind> kinds;
  FilterParams params;

  // "blue,green,red,gray[,lidar]"
  static FeatureSpec parse(std::string_view list);
  // Best-performing aerial set, plus LiDAR for task 2.
  static FeatureSpec defaults(Task task);
  // Gradient-boosting preset without the gray plane.
  static FeatureSpec no_gray(Task task);

  bool has(FeatureKind kind) const noexcept;
  std::vector<std::string> names() const;
  std::string to_string() const;
  // Throws ConfigError on duplicates or a LiDAR/task disagreement.
  void validate(Task task) const;
};

struct FeatureGrid {
  std::string name;
  Grid<float> values;
};

// Channel mapping: decoded files are RGB; planes come back as blue, green, red.
std::array<FeatureGrid, 3> split_channels(const Tile& tile);

// round(0.299 R + 0.587 G + 0.114 B)
FeatureGrid to_gray(const Tile& tile);
Grid<std::uint8_t> gray_u8(const RgbImage& rgb);

// One of histeq, clahe, morph, gabor, canny computed on the gray image.
FeatureGrid extract_filter_feature(const Tile& tile, FeatureKind kind, const FilterParams& params = {});

// All planes of spec, in spec order. Throws DataError if LiDAR is requested
// but the tile has none.
std::vector<FeatureGrid> compute_feature_grids(const Tile& tile, const FeatureSpec& spec);

}  // namespace mapseg
