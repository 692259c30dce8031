#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mapseg/raster.hpp"

namespace mapseg {

enum class Task { kTask1 = 1, kTask2 = 2 };

struct ManifestEntry {
  std::string id;
  std::filesystem::path rgb;
  std::optional<std::filesystem::path> lidar;
  std::optional<std::filesystem::path> mask;
};

// Paths held in memory are resolved; on disk they are relative to the
// manifest's directory.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  Task task = Task::kTask1;
};

// Unique ids; task 2 requires a LiDAR path on every entry.
void validate_manifest(const DatasetManifest& manifest);

// A directory is scanned with scan_dataset_dir; the task is 2 when it has a
// lidar/ folder.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// images/, lidar/ and masks/ folders matched by file stem.
DatasetManifest scan_dataset_dir(const std::filesystem::path& root, Task task);

struct LoadOptions {
  // Replaces NaN/inf LiDAR cells before validation instead of rejecting them.
  std::optional<float> lidar_fill;
};

Tile load_tile(const ManifestEntry& entry, const LoadOptions& options = {});

RgbImage load_rgb(const std::filesystem::path& path);
LidarGrid load_lidar(const std::filesystem::path& path, const LoadOptions& options = {});
Mask load_mask(const std::filesystem::path& path);

// PNG (or TIFF by extension) for 8-bit rasters, float TIFF for LiDAR.
void save_rgb(const RgbImage& image, const std::filesystem::path& path);
void save_lidar(const LidarGrid& lidar, const std::filesystem::path& path);
void save_mask(const Mask& mask, const std::filesystem::path& path);

// Splits a scene into tile_size x tile_size tiles in row-major order. Tile ids
// are "<scene id>_r<row>_c<col>".
std::vector<Tile> tile_grid(const Tile& scene, int tile_size);

// Inverse of tile_grid for a tiles_down x tiles_across layout.
Tile stitch_tiles(std::span<const Tile> tiles, int tiles_down, int tiles_across,
                  std::string id = "scene");

}  // namespace mapseg
