#pragma once

#include "mapseg/raster.hpp"

namespace mapseg {

// k x k all-ones square window, k odd.
class StructuringElement {
 public:
  // Throws ConfigError for even or non-positive sizes.
  explicit StructuringElement(int size);

  int size() const noexcept { return size_; }
  int radius() const noexcept { return size_ / 2; }

 private:
  int size_;
};

inline constexpr int kBoundaryKernel = 7;

// Output pixel is 1 iff every pixel under the centred window is 1. Pixels
// outside the image count as background.
Mask erode(const Mask& mask, const StructuringElement& se);

// mask AND NOT erode(mask, se): the ring of edge pixels used as the auxiliary
// training label. Together with erode(mask, se) it partitions the mask.
Mask boundary_mask(const Mask& mask, const StructuringElement& se = StructuringElement(kBoundaryKernel));

// Band of Chebyshev thickness d inside the mask contour, computed as
// mask AND NOT erode(mask, 2d+1). Throws ConfigError for d < 1.
Mask inner_band(const Mask& mask, int d);

}  // namespace mapseg
