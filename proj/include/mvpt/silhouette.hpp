#pragma once

#include <cstdint>
#include <vector>

#include "mvpt/types.hpp"

namespace mvpt {

// Row-major boolean raster. Foreground pixels are the silhouette.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> foreground;  // 0 or 1, width*height entries

  static BinaryMask zeros(int width, int height);

  bool at(int x, int y) const {
    return foreground[static_cast<size_t>(y) * width + x] != 0;
  }
  void set(int x, int y, bool on) {
    foreground[static_cast<size_t>(y) * width + x] = on ? 1 : 0;
  }
  size_t count_foreground() const;
  bool operator==(const BinaryMask&) const = default;
};

enum class Connectivity { Four = 4, Eight = 8 };

// Component labels are dense 1..K over foreground (0 = background) in
// raster-scan discovery order, so labeling is deterministic.
struct ComponentLabeling {
  std::vector<std::int32_t> labels;  // width*height, row-major
  std::vector<size_t> sizes;         // sizes[k-1] = pixel count of label k
  int num_components() const { return static_cast<int>(sizes.size()); }
};

// Sub-raster under `box` (clamped to the image first). Throws
// EmptyIntersection when nothing remains. Fractional box edges are expanded
// outward (floor on min, ceil on max) so the crop covers the box.
BinaryMask crop(const BinaryMask& mask, const BoundingBox& box);

// Two-pass union-find labeling.
ComponentLabeling connected_components(
    const BinaryMask& mask, Connectivity connectivity = Connectivity::Eight);

// Keeps exactly one maximum-size component (ties: the one discovered first
// in raster order). Empty input stays empty.
BinaryMask isolate_largest(const BinaryMask& mask,
                           Connectivity connectivity = Connectivity::Eight);

// Tight bounds of the foreground. Throws EmptyMask.
BoundingBox mask_to_bbox(const BinaryMask& mask);

// Intersection over union of two boxes, 0 when disjoint.
double bbox_iou(const BoundingBox& a, const BoundingBox& b);

}  // namespace mvpt
