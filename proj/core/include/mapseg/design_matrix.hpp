#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mapseg/features.hpp"
#include "mapseg/morphology.hpp"
#include "mapseg/raster.hpp"

namespace mapseg {

enum class MaskVariant : std::uint8_t { kOriginal = 0, kBoundary = 1 };

struct RowProvenance {
  std::uint32_t tile = 0;  // index into FeatureMatrix::tile_ids
  std::int32_t row = 0;
  std::int32_t col = 0;
  MaskVariant variant = MaskVariant::kOriginal;
  friend bool operator==(const RowProvenance&, const RowProvenance&) = default;
};

// Flattened per-pixel table: row-major float features plus a binary label
// per row. Provenance is kept in memory only; the on-disk form carries
// features and labels.
struct FeatureMatrix {
  std::vector<std::string> columns;
  std::vector<float> values;
  std::vector<std::uint8_t> labels;
  std::vector<RowProvenance> provenance;
  std::vector<std::string> tile_ids;

  std::size_t num_rows() const noexcept { return labels.size(); }
  std::size_t num_features() const noexcept { return columns.size(); }
  float at(std::size_t row, std::size_t feature) const noexcept {
    return values[row * columns.size() + feature];
  }
  std::span<const float> row(std::size_t r) const noexcept {
    return std::span<const float>(values).subspan(r * columns.size(), columns.size());
  }
  std::vector<float> column(std::size_t feature) const;
};

// Rows follow tile order, then row-major pixels, original-mask block first.
// With with_boundary each tile block is repeated with labels taken from
// boundary_mask(mask, se). Throws DataError for a tile without a mask.
FeatureMatrix assemble_design_matrix(std::span<const Tile> tiles, const FeatureSpec& spec,
                                     bool with_boundary,
                                     const StructuringElement& se = StructuringElement(kBoundaryKernel));

// Unlabelled rows for one tile, used at prediction time.
FeatureMatrix tile_feature_rows(const Tile& tile, const FeatureSpec& spec);

// Rebuilds one column as a raster using row provenance (original variant only).
Grid<float> reshape_column(const FeatureMatrix& matrix, std::size_t feature, std::uint32_t tile,
                           int rows, int cols);

// Little-endian binary: magic "MSFM", u32 version, u64 rows, u32 columns,
// per column (u32 length, bytes), then rows x columns float32 with the label
// as the final column.
void save_matrix(const FeatureMatrix& matrix, const std::filesystem::path& path);
FeatureMatrix load_matrix(const std::filesystem::path& path);

std::vector<unsigned char> encode_matrix(const FeatureMatrix& matrix);
FeatureMatrix decode_matrix(std::span<const unsigned char> bytes);

}  // namespace mapseg
