#include "mapseg/raster_io.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string_view>

#include "json.hpp"
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "mapseg/error.hpp"
#include "mapseg/file_util.hpp"

namespace mapseg {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::size_t count_ones(const Mask& mask) noexcept {
  return static_cast<std::size_t>(
      std::count_if(mask.values().begin(), mask.values().end(), [](auto v) { return v != 0; }));
}

namespace {

cv::Mat read_image(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("missing file: " + path.string());
  cv::Mat image = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (image.empty()) throw DataError("cannot decode image: " + path.string());
  return image;
}

void write_image(const cv::Mat& image, const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext.empty()) throw DataError("image path needs an extension: " + path.string());
  std::vector<unsigned char> buffer;
  try {
    if (!cv::imencode(ext, image, buffer)) throw DataError("cannot encode image: " + path.string());
  } catch (const cv::Exception& e) {
    throw DataError("cannot encode image " + path.string() + ": " + e.what());
  }
  write_file_atomic(path, buffer);
}

template <typename T>
void require_shape(const Grid<T>& grid, int rows, int cols, std::string_view what,
                   const fs::path& path) {
  if (!grid.same_shape(rows, cols)) {
    throw DataError("dimension mismatch: " + std::string(what) + " " + path.string() + " is " +
                    std::to_string(grid.rows()) + "x" + std::to_string(grid.cols()) +
                    ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string relative_to(const fs::path& target, const fs::path& base) {
  const fs::path abs_target = fs::absolute(target).lexically_normal();
  const fs::path abs_base = fs::absolute(base).lexically_normal();
  return abs_target.lexically_relative(abs_base).generic_string();
}

}  // namespace

void validate_manifest(const DatasetManifest& manifest) {
  std::set<std::string> seen;
  for (const auto& entry : manifest.entries) {
    if (entry.id.empty()) throw ConfigError("manifest entry with empty id");
    if (!seen.insert(entry.id).second) throw ConfigError("duplicate tile id: " + entry.id);
    if (manifest.task == Task::kTask2 && !entry.lidar) {
      throw ConfigError("task 2 entry without lidar: " + entry.id);
    }
  }
}

DatasetManifest load_manifest(const fs::path& path) {
  if (fs::is_directory(path)) {
    return scan_dataset_dir(path, fs::is_directory(path / "lidar") ? Task::kTask2 : Task::kTask1);
  }
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_file(path));
  } catch (const ordered_json::exception& e) {
    throw ConfigError("malformed manifest " + path.string() + ": " + e.what());
  }
  const fs::path base = path.parent_path();
  DatasetManifest manifest;
  try {
    const int task = doc.value("task", 1);
    if (task != 1 && task != 2) throw ConfigError("manifest task must be 1 or 2");
    manifest.task = static_cast<Task>(task);
    for (const auto& item : doc.at("entries")) {
      ManifestEntry entry;
      entry.id = item.at("id").get<std::string>();
      entry.rgb = resolve(base, item.at("rgb").get<std::string>());
      if (item.contains("lidar") && !item["lidar"].is_null()) {
        entry.lidar = resolve(base, item["lidar"].get<std::string>());
      }
      if (item.contains("mask") && !item["mask"].is_null()) {
        entry.mask = resolve(base, item["mask"].get<std::string>());
      }
      manifest.entries.push_back(std::move(entry));
    }
  } catch (const ordered_json::exception& e) {
    throw ConfigError("malformed manifest " + path.string() + ": " + e.what());
  }
  validate_manifest(manifest);
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  validate_manifest(manifest);
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  ordered_json doc;
  doc["task"] = static_cast<int>(manifest.task);
  doc["entries"] = ordered_json::array();
  for (const auto& entry : manifest.entries) {
    ordered_json item;
    item["id"] = entry.id;
    item["rgb"] = relative_to(entry.rgb, base);
    item["lidar"] = entry.lidar ? ordered_json(relative_to(*entry.lidar, base)) : ordered_json();
    item["mask"] = entry.mask ? ordered_json(relative_to(*entry.mask, base)) : ordered_json();
    doc["entries"].push_back(std::move(item));
  }
  write_file_atomic(path, doc.dump(2) + "\n");
}

DatasetManifest scan_dataset_dir(const fs::path& root, Task task) {
  const fs::path images = root / "images";
  if (!fs::is_directory(images)) throw ConfigError("no images/ folder under " + root.string());

  auto index_folder = [](const fs::path& dir) {
    std::map<std::string, fs::path> by_stem;
    if (fs::is_directory(dir)) {
      for (const auto& item : fs::directory_iterator(dir)) {
        if (item.is_regular_file()) by_stem[item.path().stem().string()] = item.path();
      }
    }
    return by_stem;
  };
  const auto rgb = index_folder(images);
  const auto lidar = index_folder(root / "lidar");
  const auto masks = index_folder(root / "masks");

  DatasetManifest manifest;
  manifest.task = task;
  for (const auto& [stem, path] : rgb) {
    ManifestEntry entry{stem, path, std::nullopt, std::nullopt};
    if (auto it = lidar.find(stem); it != lidar.end()) entry.lidar = it->second;
    if (auto it = masks.find(stem); it != masks.end()) entry.mask = it->second;
    manifest.entries.push_back(std::move(entry));
  }
  validate_manifest(manifest);
  return manifest;
}

RgbImage load_rgb(const fs::path& path) {
  cv::Mat image = read_image(path);
  if (image.depth() != CV_8U) throw DataError("aerial image must be 8-bit: " + path.string());
  RgbImage out(image.rows, image.cols);
  const int channels = image.channels();
  if (channels != 1 && channels != 3 && channels != 4) {
    throw DataError("unsupported channel count in " + path.string());
  }
  for (int r = 0; r < image.rows; ++r) {
    const auto* row = image.ptr<std::uint8_t>(r);
    for (int c = 0; c < image.cols; ++c) {
      const auto* px = row + static_cast<std::ptrdiff_t>(c) * channels;
      // OpenCV decodes colour files as BGR(A).
      out(r, c) = channels == 1 ? Rgb{px[0], px[0], px[0]} : Rgb{px[2], px[1], px[0]};
    }
  }
  return out;
}

LidarGrid load_lidar(const fs::path& path, const LoadOptions& options) {
  cv::Mat image = read_image(path);
  if (image.channels() != 1) throw DataError("LiDAR raster must be single-band: " + path.string());
  cv::Mat values;
  image.convertTo(values, CV_32F);
  LidarGrid out(values.rows, values.cols);
  for (int r = 0; r < values.rows; ++r) {
    const float* row = values.ptr<float>(r);
    for (int c = 0; c < values.cols; ++c) {
      float v = row[c];
      if (!std::isfinite(v)) {
        if (!options.lidar_fill) {
          throw DataError("non-finite LiDAR value at (" + std::to_string(r) + ", " +
                          std::to_string(c) + ") in " + path.string());
        }
        v = *options.lidar_fill;
      }
      out(r, c) = v;
    }
  }
  return out;
}

Mask load_mask(const fs::path& path) {
  cv::Mat image = read_image(path);
  Mask out(image.rows, image.cols);
  std::vector<cv::Mat> planes;
  cv::split(image, planes);
  for (const auto& plane : planes) {
    cv::Mat nonzero = plane != 0;
    for (int r = 0; r < image.rows; ++r) {
      const auto* row = nonzero.ptr<std::uint8_t>(r);
      for (int c = 0; c < image.cols; ++c) {
        if (row[c]) out(r, c) = 1;
      }
    }
  }
  return out;
}

void save_rgb(const RgbImage& image, const fs::path& path) {
  cv::Mat mat(image.rows(), image.cols(), CV_8UC3);
  for (int r = 0; r < image.rows(); ++r) {
    auto* row = mat.ptr<std::uint8_t>(r);
    for (int c = 0; c < image.cols(); ++c) {
      const Rgb px = image(r, c);
      row[3 * c + 0] = px.b;
      row[3 * c + 1] = px.g;
      row[3 * c + 2] = px.r;
    }
  }
  write_image(mat, path);
}

void save_lidar(const LidarGrid& lidar, const fs::path& path) {
  cv::Mat mat(lidar.rows(), lidar.cols(), CV_32FC1);
  for (int r = 0; r < lidar.rows(); ++r) {
    std::copy_n(&lidar(r, 0), lidar.cols(), mat.ptr<float>(r));
  }
  write_image(mat, path);
}

void save_mask(const Mask& mask, const fs::path& path) {
  cv::Mat mat(mask.rows(), mask.cols(), CV_8UC1);
  for (int r = 0; r < mask.rows(); ++r) {
    auto* row = mat.ptr<std::uint8_t>(r);
    for (int c = 0; c < mask.cols(); ++c) {
      const auto v = mask(r, c);
      if (v > 1) throw DataError("mask is not binary at (" + std::to_string(r) + ", " +
                                 std::to_string(c) + ")");
      row[c] = v ? 255 : 0;
    }
  }
  write_image(mat, path);
}

Tile load_tile(const ManifestEntry& entry, const LoadOptions& options) {
  Tile tile;
  tile.id = entry.id;
  tile.rgb = load_rgb(entry.rgb);
  const int rows = tile.rgb.rows();
  const int cols = tile.rgb.cols();
  if (entry.lidar) {
    tile.lidar = load_lidar(*entry.lidar, options);
    require_shape(*tile.lidar, rows, cols, "lidar", *entry.lidar);
  }
  if (entry.mask) {
    tile.mask = load_mask(*entry.mask);
    require_shape(*tile.mask, rows, cols, "mask", *entry.mask);
  }
  return tile;
}

namespace {

template <typename T>
Grid<T> crop(const Grid<T>& src, int top, int left, int size) {
  Grid<T> out(size, size);
  for (int r = 0; r < size; ++r) {
    std::copy_n(&src(top + r, left), size, &out(r, 0));
  }
  return out;
}

template <typename T>
void paste(Grid<T>& dst, const Grid<T>& src, int top, int left) {
  for (int r = 0; r < src.rows(); ++r) {
    std::copy_n(&src(r, 0), src.cols(), &dst(top + r, left));
  }
}

}  // namespace

std::vector<Tile> tile_grid(const Tile& scene, int tile_size) {
  if (tile_size <= 0) throw ConfigError("tile size must be positive");
  const int rows = scene.rows();
  const int cols = scene.cols();
  if (rows % tile_size != 0 || cols % tile_size != 0) {
    throw DataError("scene " + std::to_string(rows) + "x" + std::to_string(cols) +
                    " is not divisible by tile size " + std::to_string(tile_size));
  }
  if (scene.lidar && !scene.lidar->same_shape(rows, cols)) throw DataError("lidar shape mismatch");
  if (scene.mask && !scene.mask->same_shape(rows, cols)) throw DataError("mask shape mismatch");

  std::vector<Tile> tiles;
  for (int tr = 0; tr < rows / tile_size; ++tr) {
    for (int tc = 0; tc < cols / tile_size; ++tc) {
      const int top = tr * tile_size;
      const int left = tc * tile_size;
      Tile tile;
      tile.id = scene.id + "_r" + std::to_string(tr) + "_c" + std::to_string(tc);
      tile.rgb = crop(scene.rgb, top, left, tile_size);
      if (scene.lidar) tile.lidar = crop(*scene.lidar, top, left, tile_size);
      if (scene.mask) tile.mask = crop(*scene.mask, top, left, tile_size);
      tiles.push_back(std::move(tile));
    }
  }
  return tiles;
}

Tile stitch_tiles(std::span<const Tile> tiles, int tiles_down, int tiles_across, std::string id) {
  if (tiles_down <= 0 || tiles_across <= 0 ||
      tiles.size() != static_cast<std::size_t>(tiles_down) * static_cast<std::size_t>(tiles_across)) {
    throw DataError("tile count does not match the requested layout");
  }
  const int size_r = tiles.front().rows();
  const int size_c = tiles.front().cols();
  const bool has_lidar = tiles.front().lidar.has_value();
  const bool has_mask = tiles.front().mask.has_value();

  Tile scene;
  scene.id = std::move(id);
  scene.rgb = RgbImage(size_r * tiles_down, size_c * tiles_across);
  if (has_lidar) scene.lidar = LidarGrid(scene.rgb.rows(), scene.rgb.cols());
  if (has_mask) scene.mask = Mask(scene.rgb.rows(), scene.rgb.cols());
  for (int tr = 0; tr < tiles_down; ++tr) {
    for (int tc = 0; tc < tiles_across; ++tc) {
      const Tile& tile = tiles[static_cast<std::size_t>(tr * tiles_across + tc)];
      if (tile.rows() != size_r || tile.cols() != size_c ||
          tile.lidar.has_value() != has_lidar || tile.mask.has_value() != has_mask) {
        throw DataError("inconsistent tile " + tile.id);
      }
      paste(scene.rgb, tile.rgb, tr * size_r, tc * size_c);
      if (has_lidar) paste(*scene.lidar, *tile.lidar, tr * size_r, tc * size_c);
      if (has_mask) paste(*scene.mask, *tile.mask, tr * size_r, tc * size_c);
    }
  }
  return scene;
}

}  // namespace mapseg
