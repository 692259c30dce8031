#include "mapseg/design_matrix.hpp"

#include <bit>
#include <cstring>

#include "mapseg/error.hpp"
#include "mapseg/file_util.hpp"
#include "mapseg/parallel.hpp"

namespace mapseg {

namespace {

constexpr char kMagic[4] = {'M', 'S', 'F', 'M'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "matrix I/O assumes a little-endian host");

template <typename T>
void put(std::vector<unsigned char>& out, T value) {
  const auto* p = reinterpret_cast<const unsigned char*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError("truncated feature matrix");
  }
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

// Feature rows of one tile for a single variant, without labels.
std::vector<float> tile_block(const Tile& tile, const FeatureSpec& spec) {
  const auto grids = compute_feature_grids(tile, spec);
  const std::size_t pixels = static_cast<std::size_t>(tile.rows()) * tile.cols();
  const std::size_t width = grids.size();
  std::vector<float> block(pixels * width);
  for (std::size_t f = 0; f < width; ++f) {
    const auto plane = grids[f].values.values();
    if (plane.size() != pixels) throw DataError("feature plane size mismatch in tile " + tile.id);
    for (std::size_t p = 0; p < pixels; ++p) block[p * width + f] = plane[p];
  }
  return block;
}

}  // namespace

std::vector<float> FeatureMatrix::column(std::size_t feature) const {
  std::vector<float> out(num_rows());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = at(r, feature);
  return out;
}

FeatureMatrix assemble_design_matrix(std::span<const Tile> tiles, const FeatureSpec& spec,
                                     bool with_boundary, const StructuringElement& se) {
  for (const auto& tile : tiles) {
    if (!tile.mask) throw DataError("tile " + tile.id + " has no ground-truth mask");
    if (spec.has(FeatureKind::kLidar) && !tile.lidar) {
      throw DataError("tile " + tile.id + " has no lidar raster");
    }
  }

  // Extraction may run out of order; assembly below is in tile order.
  std::vector<std::vector<float>> blocks(tiles.size());
  parallel_for(tiles.size(), [&](std::size_t i) { blocks[i] = tile_block(tiles[i], spec); });

  FeatureMatrix matrix;
  matrix.columns = spec.names();
  const std::size_t variants = with_boundary ? 2 : 1;
  std::size_t total_rows = 0;
  for (const auto& tile : tiles) total_rows += static_cast<std::size_t>(tile.rows()) * tile.cols() * variants;
  matrix.values.reserve(total_rows * matrix.columns.size());
  matrix.labels.reserve(total_rows);
  matrix.provenance.reserve(total_rows);

  for (std::size_t t = 0; t < tiles.size(); ++t) {
    const Tile& tile = tiles[t];
    matrix.tile_ids.push_back(tile.id);
    const Mask boundary = with_boundary ? boundary_mask(*tile.mask, se) : Mask();
    for (std::size_t v = 0; v < variants; ++v) {
      const MaskVariant variant = v == 0 ? MaskVariant::kOriginal : MaskVariant::kBoundary;
      const Mask& labels = v == 0 ? *tile.mask : boundary;
      matrix.values.insert(matrix.values.end(), blocks[t].begin(), blocks[t].end());
      for (int r = 0; r < tile.rows(); ++r) {
        for (int c = 0; c < tile.cols(); ++c) {
          matrix.labels.push_back(labels(r, c) ? 1 : 0);
          matrix.provenance.push_back({static_cast<std::uint32_t>(t), r, c, variant});
        }
      }
    }
  }
  return matrix;
}

FeatureMatrix tile_feature_rows(const Tile& tile, const FeatureSpec& spec) {
  FeatureMatrix matrix;
  matrix.columns = spec.names();
  matrix.values = tile_block(tile, spec);
  matrix.tile_ids.push_back(tile.id);
  const std::size_t pixels = static_cast<std::size_t>(tile.rows()) * tile.cols();
  matrix.labels.assign(pixels, 0);
  matrix.provenance.reserve(pixels);
  for (int r = 0; r < tile.rows(); ++r) {
    for (int c = 0; c < tile.cols(); ++c) {
      matrix.provenance.push_back({0, r, c, MaskVariant::kOriginal});
      if (tile.mask) matrix.labels[static_cast<std::size_t>(r) * tile.cols() + c] = (*tile.mask)(r, c) ? 1 : 0;
    }
  }
  return matrix;
}

Grid<float> reshape_column(const FeatureMatrix& matrix, std::size_t feature, std::uint32_t tile,
                           int rows, int cols) {
  Grid<float> out(rows, cols);
  for (std::size_t i = 0; i < matrix.provenance.size(); ++i) {
    const auto& p = matrix.provenance[i];
    if (p.tile == tile && p.variant == MaskVariant::kOriginal) out(p.row, p.col) = matrix.at(i, feature);
  }
  return out;
}

std::vector<unsigned char> encode_matrix(const FeatureMatrix& matrix) {
  std::vector<unsigned char> out;
  const std::size_t width = matrix.num_features();
  out.reserve(64 + matrix.num_rows() * (width + 1) * sizeof(float));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, matrix.num_rows());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(width + 1));
  auto put_name = [&](const std::string& name) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
  };
  for (const auto& name : matrix.columns) put_name(name);
  put_name("label");
  for (std::size_t r = 0; r < matrix.num_rows(); ++r) {
    for (float v : matrix.row(r)) put<float>(out, v);
    put<float>(out, static_cast<float>(matrix.labels[r]));
  }
  return out;
}

FeatureMatrix decode_matrix(std::span<const unsigned char> bytes) {
  Reader in(bytes);
  if (in.get_string(4) != std::string(kMagic, 4)) throw DataError("not a feature matrix file");
  const auto version = in.get<std::uint32_t>();
  if (version != kVersion) throw DataError("unsupported feature matrix version " + std::to_string(version));
  const auto rows = in.get<std::uint64_t>();
  const auto cols = in.get<std::uint32_t>();
  if (cols < 2) throw DataError("feature matrix needs at least one feature and a label");
  FeatureMatrix matrix;
  for (std::uint32_t c = 0; c < cols; ++c) {
    const auto len = in.get<std::uint32_t>();
    matrix.columns.push_back(in.get_string(len));
  }
  if (matrix.columns.back() != "label") throw DataError("last matrix column must be the label");
  matrix.columns.pop_back();
  if (in.remaining() != rows * cols * sizeof(float)) throw DataError("feature matrix size mismatch");
  const std::size_t width = cols - 1;
  matrix.values.resize(rows * width);
  matrix.labels.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t f = 0; f < width; ++f) matrix.values[r * width + f] = in.get<float>();
    const float label = in.get<float>();
    if (label != 0.0f && label != 1.0f) throw DataError("non-binary label in row " + std::to_string(r));
    matrix.labels[r] = label == 1.0f ? 1 : 0;
  }
  return matrix;
}

void save_matrix(const FeatureMatrix& matrix, const std::filesystem::path& path) {
  write_file_atomic(path, encode_matrix(matrix));
}

FeatureMatrix load_matrix(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  return decode_matrix(std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(bytes.data()),
                                                      bytes.size()));
}

}  // namespace mapseg
