#include "mapseg/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "mapseg/error.hpp"

namespace mapseg {

namespace {

constexpr std::array<std::pair<FeatureKind, std::string_view>, 10> kNames{{
    {FeatureKind::kBlue, "blue"},
    {FeatureKind::kGreen, "green"},
    {FeatureKind::kRed, "red"},
    {FeatureKind::kGray, "gray"},
    {FeatureKind::kLidar, "lidar"},
    {FeatureKind::kHistEq, "histeq"},
    {FeatureKind::kClahe, "clahe"},
    {FeatureKind::kMorph, "morph"},
    {FeatureKind::kGabor, "gabor"},
    {FeatureKind::kCanny, "canny"},
}};

Grid<float> to_float(const Grid<std::uint8_t>& src) {
  Grid<float> out(src.rows(), src.cols());
  std::transform(src.values().begin(), src.values().end(), out.values().begin(),
                 [](std::uint8_t v) { return static_cast<float>(v); });
  return out;
}

cv::Mat to_mat(const Grid<std::uint8_t>& src) {
  cv::Mat mat(src.rows(), src.cols(), CV_8UC1);
  std::copy(src.values().begin(), src.values().end(), mat.ptr<std::uint8_t>(0));
  return mat;
}

Grid<float> from_mat_u8(const cv::Mat& mat) {
  Grid<float> out(mat.rows, mat.cols);
  for (int r = 0; r < mat.rows; ++r) {
    const auto* row = mat.ptr<std::uint8_t>(r);
    for (int c = 0; c < mat.cols; ++c) out(r, c) = row[c];
  }
  return out;
}

// Global 256-bin cdf remap: v -> round(cdf(v) * 255).
Grid<float> histogram_equalize(const Grid<std::uint8_t>& gray) {
  std::array<std::uint64_t, 256> hist{};
  for (auto v : gray.values()) ++hist[v];
  const std::uint64_t n = gray.size();
  std::array<float, 256> lut{};
  std::uint64_t cumulative = 0;
  for (int v = 0; v < 256; ++v) {
    cumulative += hist[static_cast<std::size_t>(v)];
    // Integer round-half-up of cumulative * 255 / n.
    lut[static_cast<std::size_t>(v)] =
        n == 0 ? 0.0f : static_cast<float>((2 * cumulative * 255 + n) / (2 * n));
  }
  Grid<float> out(gray.rows(), gray.cols());
  std::transform(gray.values().begin(), gray.values().end(), out.values().begin(),
                 [&](std::uint8_t v) { return lut[v]; });
  return out;
}

// Grayscale min (erode) or max (dilate) over a square window clipped to the image.
Grid<std::uint8_t> gray_extremum(const Grid<std::uint8_t>& src, int radius, bool take_max) {
  auto pick = [take_max](std::uint8_t a, std::uint8_t b) {
    return take_max ? std::max(a, b) : std::min(a, b);
  };
  const int rows = src.rows();
  const int cols = src.cols();
  Grid<std::uint8_t> horizontal(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      std::uint8_t v = src(r, c);
      for (int x = std::max(0, c - radius); x <= std::min(cols - 1, c + radius); ++x) v = pick(v, src(r, x));
      horizontal(r, c) = v;
    }
  }
  Grid<std::uint8_t> out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      std::uint8_t v = horizontal(r, c);
      for (int y = std::max(0, r - radius); y <= std::min(rows - 1, r + radius); ++y) v = pick(v, horizontal(y, c));
      out(r, c) = v;
    }
  }
  return out;
}

Grid<float> gabor_energy(const Grid<std::uint8_t>& gray, const GaborParams& p) {
  if (p.orientations < 1 || !(p.wavelength > 0.0) || !(p.sigma > 0.0) || !(p.aspect > 0.0)) {
    throw ConfigError("gabor parameters must be positive");
  }
  const int half = static_cast<int>(std::ceil(3.0 * p.sigma));
  const int size = 2 * half + 1;
  const int rows = gray.rows();
  const int cols = gray.cols();
  Grid<double> total(rows, cols);

  std::vector<double> even(static_cast<std::size_t>(size) * size);
  std::vector<double> odd(even.size());
  for (int o = 0; o < p.orientations; ++o) {
    const double theta = std::numbers::pi * o / p.orientations;
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    double even_sum = 0.0;
    for (int y = -half; y <= half; ++y) {
      for (int x = -half; x <= half; ++x) {
        const double xr = x * ct + y * st;
        const double yr = -x * st + y * ct;
        const double envelope =
            std::exp(-(xr * xr + p.aspect * p.aspect * yr * yr) / (2.0 * p.sigma * p.sigma));
        const double phase = 2.0 * std::numbers::pi * xr / p.wavelength;
        const auto idx = static_cast<std::size_t>((y + half) * size + (x + half));
        even[idx] = envelope * std::cos(phase);
        odd[idx] = envelope * std::sin(phase);
        even_sum += even[idx];
      }
    }
    // Zero-mean even kernel; the odd kernel is antisymmetric already.
    const double even_mean = even_sum / static_cast<double>(even.size());
    for (auto& v : even) v -= even_mean;

    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const double centre = gray(r, c);
        double re = 0.0;
        double im = 0.0;
        for (int y = -half; y <= half; ++y) {
          const int yy = std::clamp(r + y, 0, rows - 1);
          for (int x = -half; x <= half; ++x) {
            const int xx = std::clamp(c + x, 0, cols - 1);
            // Both kernels sum to zero, so responding to (pixel - centre)
            // is equivalent and exact on flat regions.
            const double v = gray(yy, xx) - centre;
            const auto idx = static_cast<std::size_t>((y + half) * size + (x + half));
            re += even[idx] * v;
            im += odd[idx] * v;
          }
        }
        total(r, c) += std::hypot(re, im);
      }
    }
  }
  Grid<float> out(rows, cols);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values()[i] = static_cast<float>(total.values()[i] / p.orientations);
  }
  return out;
}

}  // namespace

std::string_view feature_name(FeatureKind kind) noexcept {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

FeatureKind parse_feature_kind(std::string_view name) {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  throw ConfigError("unknown feature: " + std::string(name));
}

FeatureSpec FeatureSpec::parse(std::string_view list) {
  FeatureSpec spec;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t end = std::min(list.find(',', start), list.size());
    std::string_view token = list.substr(start, end - start);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (token.empty()) throw ConfigError("empty entry in feature list");
    spec.kinds.push_back(parse_feature_kind(token));
    start = end + 1;
  }
  std::set<FeatureKind> unique(spec.kinds.begin(), spec.kinds.end());
  if (unique.size() != spec.kinds.size()) throw ConfigError("duplicate feature in list");
  return spec;
}

FeatureSpec FeatureSpec::defaults(Task task) {
  FeatureSpec spec;
  spec.kinds = {FeatureKind::kBlue, FeatureKind::kGreen, FeatureKind::kRed, FeatureKind::kGray};
  if (task == Task::kTask2) spec.kinds.push_back(FeatureKind::kLidar);
  return spec;
}

FeatureSpec FeatureSpec::no_gray(Task task) {
  FeatureSpec spec;
  spec.kinds = {FeatureKind::kBlue, FeatureKind::kGreen, FeatureKind::kRed};
  if (task == Task::kTask2) spec.kinds.push_back(FeatureKind::kLidar);
  return spec;
}

bool FeatureSpec::has(FeatureKind kind) const noexcept {
  return std::find(kinds.begin(), kinds.end(), kind) != kinds.end();
}

std::vector<std::string> FeatureSpec::names() const {
  std::vector<std::string> out;
  for (auto k : kinds) out.emplace_back(feature_name(k));
  return out;
}

std::string FeatureSpec::to_string() const {
  std::string out;
  for (auto k : kinds) {
    if (!out.empty()) out += ',';
    out += feature_name(k);
  }
  return out;
}

void FeatureSpec::validate(Task task) const {
  if (kinds.empty()) throw ConfigError("feature list is empty");
  std::set<FeatureKind> unique(kinds.begin(), kinds.end());
  if (unique.size() != kinds.size()) throw ConfigError("duplicate feature in list");
  if (has(FeatureKind::kLidar) != (task == Task::kTask2)) {
    throw ConfigError(task == Task::kTask2 ? "task 2 requires the lidar feature"
                                           : "task 1 must not use the lidar feature");
  }
}

std::array<FeatureGrid, 3> split_channels(const Tile& tile) {
  const int rows = tile.rows();
  const int cols = tile.cols();
  std::array<FeatureGrid, 3> out{FeatureGrid{"blue", Grid<float>(rows, cols)},
                                 FeatureGrid{"green", Grid<float>(rows, cols)},
                                 FeatureGrid{"red", Grid<float>(rows, cols)}};
  const auto src = tile.rgb.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    out[0].values.values()[i] = src[i].b;
    out[1].values.values()[i] = src[i].g;
    out[2].values.values()[i] = src[i].r;
  }
  return out;
}

Grid<std::uint8_t> gray_u8(const RgbImage& rgb) {
  Grid<std::uint8_t> out(rgb.rows(), rgb.cols());
  const auto src = rgb.values();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const std::uint32_t weighted = 299u * src[i].r + 587u * src[i].g + 114u * src[i].b;
    out.values()[i] = static_cast<std::uint8_t>(std::min<std::uint32_t>(255, (weighted + 500) / 1000));
  }
  return out;
}

FeatureGrid to_gray(const Tile& tile) { return {"gray", to_float(gray_u8(tile.rgb))}; }

FeatureGrid extract_filter_feature(const Tile& tile, FeatureKind kind, const FilterParams& params) {
  const Grid<std::uint8_t> gray = gray_u8(tile.rgb);
  const std::string name(feature_name(kind));
  switch (kind) {
    case FeatureKind::kHistEq:
      return {name, histogram_equalize(gray)};
    case FeatureKind::kClahe: {
      if (!(params.clahe.clip_limit > 0.0) || params.clahe.tiles < 1) {
        throw ConfigError("clahe needs a positive clip limit and tile count");
      }
      auto clahe = cv::createCLAHE(params.clahe.clip_limit, cv::Size(params.clahe.tiles, params.clahe.tiles));
      cv::Mat out;
      clahe->apply(to_mat(gray), out);
      return {name, from_mat_u8(out)};
    }
    case FeatureKind::kMorph: {
      if (params.morph.kernel < 1 || params.morph.kernel % 2 == 0) {
        throw ConfigError("morph kernel must be odd and positive");
      }
      const int radius = params.morph.kernel / 2;
      return {name, to_float(gray_extremum(gray_extremum(gray, radius, false), radius, true))};
    }
    case FeatureKind::kGabor:
      return {name, gabor_energy(gray, params.gabor)};
    case FeatureKind::kCanny: {
      if (params.canny.low < 0.0 || params.canny.high < params.canny.low) {
        throw ConfigError("canny thresholds must satisfy 0 <= low <= high");
      }
      cv::Mat edges;
      cv::Canny(to_mat(gray), edges, params.canny.low, params.canny.high, 3, false);
      return {name, from_mat_u8(edges)};
    }
    default:
      throw ConfigError("not a filter feature: " + name);
  }
}

std::vector<FeatureGrid> compute_feature_grids(const Tile& tile, const FeatureSpec& spec) {
  std::vector<FeatureGrid> out;
  out.reserve(spec.kinds.size());
  std::optional<std::array<FeatureGrid, 3>> channels;
  for (auto kind : spec.kinds) {
    switch (kind) {
      case FeatureKind::kBlue:
      case FeatureKind::kGreen:
      case FeatureKind::kRed: {
        if (!channels) channels = split_channels(tile);
        const std::size_t idx = kind == FeatureKind::kBlue ? 0 : kind == FeatureKind::kGreen ? 1 : 2;
        out.push_back((*channels)[idx]);
        break;
      }
      case FeatureKind::kGray:
        out.push_back(to_gray(tile));
        break;
      case FeatureKind::kLidar:
        if (!tile.lidar) throw DataError("tile " + tile.id + " has no lidar raster");
        out.push_back({"lidar", *tile.lidar});
        break;
      default:
        out.push_back(extract_filter_feature(tile, kind, spec.params));
        break;
    }
  }
  return out;
}

}  // namespace mapseg
