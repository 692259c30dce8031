#include "mapseg/morphology.hpp"

#include <string>

#include "mapseg/error.hpp"

namespace mapseg {

StructuringElement::StructuringElement(int size) : size_(size) {
  if (size < 1 || size % 2 == 0) {
    throw ConfigError("structuring element size must be odd and positive, got " +
                      std::to_string(size));
  }
}

namespace {

// One-dimensional erosion along rows (transpose=false) or columns. A pixel
// survives when the run of ones ending at its window's far edge covers the
// whole window and the window lies inside the image.
Mask erode_1d(const Mask& src, int radius, bool along_rows) {
  const int rows = src.rows();
  const int cols = src.cols();
  const int k = 2 * radius + 1;
  Mask out(rows, cols);
  const int lines = along_rows ? rows : cols;
  const int length = along_rows ? cols : rows;
  for (int line = 0; line < lines; ++line) {
    auto at = [&](int pos) -> std::uint8_t {
      return along_rows ? src(line, pos) : src(pos, line);
    };
    int run = 0;
    for (int pos = 0; pos < length; ++pos) {
      run = at(pos) ? run + 1 : 0;
      const int centre = pos - radius;
      if (centre >= radius && run >= k) {
        if (along_rows) {
          out(line, centre) = 1;
        } else {
          out(centre, line) = 1;
        }
      }
    }
  }
  return out;
}

}  // namespace

Mask erode(const Mask& mask, const StructuringElement& se) {
  const int radius = se.radius();
  if (radius == 0) return mask;
  return erode_1d(erode_1d(mask, radius, true), radius, false);
}

Mask boundary_mask(const Mask& mask, const StructuringElement& se) {
  const Mask core = erode(mask, se);
  Mask out(mask.rows(), mask.cols());
  auto src = mask.values();
  auto inner = core.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = (src[i] && !inner[i]) ? 1 : 0;
  return out;
}

Mask inner_band(const Mask& mask, int d) {
  if (d < 1) throw ConfigError("band width must be at least 1, got " + std::to_string(d));
  return boundary_mask(mask, StructuringElement(2 * d + 1));
}

}  // namespace mapseg
