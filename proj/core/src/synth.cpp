#include "mapseg/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>

#include "mapseg/error.hpp"
#include "mapseg/morphology.hpp"

namespace mapseg {

namespace fs = std::filesystem;

namespace {

struct Colour {
  double r, g, b;
};

// Roof tones; the last one is deliberately close to cast-shadow asphalt.
constexpr std::array<Colour, 5> kRoofPalette{{
    {178, 74, 52},   // terracotta
    {110, 78, 56},   // brown
    {176, 176, 170}, // light gray
    {72, 92, 120},   // slate
    {58, 60, 66},    // shadow-gray
}};
constexpr Colour kGrass{86, 124, 62};
constexpr Colour kAsphalt{105, 105, 108};
constexpr Colour kSoil{140, 120, 90};
constexpr Colour kCanopy{40, 85, 35};
constexpr double kShadowFactor = 0.5;
constexpr double kEaveFactor = 0.78;
constexpr double kLidarNoiseSigma = 0.1;
constexpr double kStoreyHeight = 3.0;

std::uint64_t mix(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }
  double normal(double sigma) { return sigma > 0.0 ? std::normal_distribution<double>(0.0, sigma)(engine_) : 0.0; }

 private:
  std::mt19937_64 engine_;
};

void fill_rect(Mask& m, int top, int left, int h, int w) {
  for (int r = std::max(0, top); r < std::min(m.rows(), top + h); ++r) {
    for (int c = std::max(0, left); c < std::min(m.cols(), left + w); ++c) m(r, c) = 1;
  }
}

std::uint8_t to_u8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

void SynthSpec::validate() const {
  if (tile_size < 32) throw ConfigError("synthetic tile size must be at least 32");
  if (tiles < 1) throw ConfigError("synthetic tile count must be at least 1");
  if (min_buildings < 1 || max_buildings < min_buildings) throw ConfigError("invalid buildings-per-tile range");
  if (!(min_height > 2.0 * kSynthLidarNoiseBound) || max_height < min_height) {
    throw ConfigError("invalid building height range");
  }
  if (noise_sigma < 0.0) throw ConfigError("aerial noise must be non-negative");
}

SynthTile synth_tile(const SynthSpec& spec, int index) {
  spec.validate();
  Rng rng(mix(spec.seed ^ mix(static_cast<std::uint64_t>(index) + 1)));
  const int n = spec.tile_size;

  // Smooth bare earth: a gentle plane plus one long-wavelength undulation.
  const double base = 10.0;
  const double tilt_r = rng.uniform(-0.2, 0.2) / n;
  const double tilt_c = rng.uniform(-0.2, 0.2) / n;
  const double wave_phase = rng.uniform(0.0, 6.283185307179586);
  LidarGrid terrain(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      terrain(r, c) = static_cast<float>(base + tilt_r * r + tilt_c * c +
                                         0.15 * std::sin(wave_phase + 2.0 * 3.141592653589793 * (r + c) / (2.0 * n)));
    }
  }

  // Ground cover.
  Grid<Colour> colour(n, n, kGrass);
  if (rng.chance(0.7)) {
    const bool horizontal = rng.chance(0.5);
    const int width = rng.integer(n / 12 + 2, n / 7 + 3);
    const int at = rng.integer(0, n - width);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        const int pos = horizontal ? r : c;
        if (pos >= at && pos < at + width) colour(r, c) = kAsphalt;
      }
    }
  }
  if (rng.chance(0.5)) {
    const int h = rng.integer(n / 8, n / 4);
    const int w = rng.integer(n / 8, n / 4);
    const int top = rng.integer(0, n - h);
    const int left = rng.integer(0, n - w);
    for (int r = top; r < top + h; ++r) {
      for (int c = left; c < left + w; ++c) colour(r, c) = kSoil;
    }
  }

  // Low vegetation: raised LiDAR but always below the lowest roof, never part
  // of the mask.
  Grid<float> raised(n, n, 0.0f);
  const int canopies = rng.integer(0, 3);
  for (int t = 0; t < canopies; ++t) {
    const int radius = rng.integer(std::max(2, n / 20), std::max(3, n / 10));
    const int cr = rng.integer(0, n - 1);
    const int cc = rng.integer(0, n - 1);
    const double height = rng.uniform(0.25, 0.5) * spec.min_height;
    for (int r = std::max(0, cr - radius); r <= std::min(n - 1, cr + radius); ++r) {
      for (int c = std::max(0, cc - radius); c <= std::min(n - 1, cc + radius); ++c) {
        const double d2 = (r - cr) * (r - cr) + (c - cc) * (c - cc);
        if (d2 <= radius * radius) {
          colour(r, c) = kCanopy;
          raised(r, c) = std::max(raised(r, c), static_cast<float>(height * (1.0 - 0.4 * d2 / (radius * radius))));
        }
      }
    }
  }

  // Buildings: rectangles and L-shapes with a flat roof a whole number of
  // storeys above min_height.
  struct Building {
    Mask footprint;
    double height;
    Colour roof;
  };
  std::vector<Building> buildings;
  const int count = rng.integer(spec.min_buildings, spec.max_buildings);
  const int storeys = static_cast<int>(std::floor((spec.max_height - spec.min_height) / kStoreyHeight));
  const int lo = std::max(6, n / 8);
  const int hi = std::max(lo + 1, n / 3);
  for (int b = 0; b < count; ++b) {
    Building building{Mask(n, n), spec.min_height + kStoreyHeight * rng.integer(0, storeys),
                      kRoofPalette[static_cast<std::size_t>(rng.integer(0, kRoofPalette.size() - 1))]};
    const int h = rng.integer(lo, hi);
    const int w = rng.integer(lo, hi);
    const int top = rng.integer(-h / 4, n - 3 * h / 4);
    const int left = rng.integer(-w / 4, n - 3 * w / 4);
    fill_rect(building.footprint, top, left, h, w);
    if (rng.chance(0.35)) {
      // Wing along the bottom edge, giving an L-shape.
      const int wing_h = rng.integer(lo / 2 + 1, h);
      const int wing_w = rng.integer(lo / 2 + 1, w);
      fill_rect(building.footprint, top + h - 1, left, wing_h, wing_w);
    }
    if (count_ones(building.footprint) > 0) buildings.push_back(std::move(building));
  }

  Mask mask(n, n);
  Grid<float> roof_height(n, n, 0.0f);
  for (const auto& b : buildings) {
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        if (!b.footprint(r, c)) continue;
        mask(r, c) = 1;
        roof_height(r, c) = std::max(roof_height(r, c), static_cast<float>(b.height));
      }
    }
  }

  // Cast shadows toward +row/+col, length growing with height; LiDAR unchanged.
  Mask shadow(n, n);
  if (spec.shadows) {
    for (const auto& b : buildings) {
      const int reach = 1 + static_cast<int>(std::lround(b.height / 4.0));
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          if (!b.footprint(r, c)) continue;
          for (int s = 1; s <= reach; ++s) {
            const int rr = r + s;
            const int cc = c + s;
            if (rr < n && cc < n && !mask(rr, cc)) shadow(rr, cc) = 1;
          }
        }
      }
    }
  }

  // Roofs, with a darker one-pixel eave along each footprint's edge.
  for (const auto& b : buildings) {
    const Mask eave = boundary_mask(b.footprint, StructuringElement(3));
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        if (!b.footprint(r, c)) continue;
        const double f = eave(r, c) ? kEaveFactor : 1.0;
        colour(r, c) = {b.roof.r * f, b.roof.g * f, b.roof.b * f};
      }
    }
  }

  SynthTile out;
  out.tile.id = "tile_" + std::string(3 - std::min<std::size_t>(3, std::to_string(index).size()), '0') +
                std::to_string(index);
  out.tile.rgb = RgbImage(n, n);
  out.tile.lidar = LidarGrid(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      Colour px = colour(r, c);
      if (shadow(r, c)) px = {px.r * kShadowFactor, px.g * kShadowFactor, px.b * kShadowFactor};
      out.tile.rgb(r, c) = {to_u8(px.r + rng.normal(spec.noise_sigma)), to_u8(px.g + rng.normal(spec.noise_sigma)),
                            to_u8(px.b + rng.normal(spec.noise_sigma))};
      const double noise =
          std::clamp(rng.normal(kLidarNoiseSigma), -kSynthLidarNoiseBound, kSynthLidarNoiseBound);
      const double above = mask(r, c) ? roof_height(r, c) : raised(r, c);
      (*out.tile.lidar)(r, c) = static_cast<float>(terrain(r, c) + above + noise);
    }
  }
  out.tile.mask = std::move(mask);
  out.terrain = std::move(terrain);
  out.shadow = std::move(shadow);
  return out;
}

DatasetManifest synth_dataset(const SynthSpec& spec, const fs::path& out_dir) {
  spec.validate();
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  fs::create_directories(out_dir / "lidar", ec);
  fs::create_directories(out_dir / "masks", ec);
  if (ec) throw DataError("cannot create dataset directory " + out_dir.string());

  DatasetManifest manifest;
  manifest.task = Task::kTask2;
  for (int i = 0; i < spec.tiles; ++i) {
    const SynthTile synth = synth_tile(spec, i);
    const Tile& tile = synth.tile;
    ManifestEntry entry{tile.id, out_dir / "images" / (tile.id + ".png"), out_dir / "lidar" / (tile.id + ".tiff"),
                        out_dir / "masks" / (tile.id + ".png")};
    save_rgb(tile.rgb, entry.rgb);
    save_lidar(*tile.lidar, *entry.lidar);
    save_mask(*tile.mask, *entry.mask);
    manifest.entries.push_back(std::move(entry));
  }
  save_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

}  // namespace mapseg
