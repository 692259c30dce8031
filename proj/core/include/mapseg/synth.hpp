#pragma once

#include <cstdint>
#include <filesystem>

#include "mapseg/raster_io.hpp"

namespace mapseg {

// Desk-scale stand-in for the aerial + LiDAR + mask triplets of a real
// dataset. Every field is deterministic given the seed.
struct SynthSpec {
  std::uint64_t seed = 0;
  int tiles = 20;
  int tile_size = 64;
  int min_buildings = 1;
  int max_buildings = 4;
  double min_height = 4.0;   // metres above terrain
  double max_height = 15.0;
  double noise_sigma = 6.0;  // aerial intensity noise
  bool shadows = true;

  void validate() const;
};

// LiDAR noise is clipped to +/- this bound, so every building pixel has
// lidar >= terrain + min_height - kSynthLidarNoiseBound.
inline constexpr double kSynthLidarNoiseBound = 0.3;

struct SynthTile {
  Tile tile;
  LidarGrid terrain;   // bare-earth elevation without noise
  Mask shadow;         // pixels darkened by a building's cast shadow
};

SynthTile synth_tile(const SynthSpec& spec, int index);

// Writes images/<id>.png, lidar/<id>.tiff, masks/<id>.png and manifest.json
// (task 2) under out_dir. Tile ids are "tile_000", "tile_001", ...
DatasetManifest synth_dataset(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace mapseg
