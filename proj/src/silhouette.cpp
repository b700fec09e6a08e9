#include "mvpt/silhouette.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mvpt/errors.hpp"

namespace mvpt {

BinaryMask BinaryMask::zeros(int width, int height) {
  BinaryMask m;
  m.width = width;
  m.height = height;
  m.foreground.assign(static_cast<size_t>(width) * height, 0);
  return m;
}

size_t BinaryMask::count_foreground() const {
  return static_cast<size_t>(
      std::count_if(foreground.begin(), foreground.end(),
                    [](std::uint8_t p) { return p != 0; }));
}

BinaryMask crop(const BinaryMask& mask, const BoundingBox& box) {
  const int x0 = std::max(0, static_cast<int>(std::floor(box.x_min)));
  const int y0 = std::max(0, static_cast<int>(std::floor(box.y_min)));
  const int x1 = std::min(mask.width, static_cast<int>(std::ceil(box.x_max)));
  const int y1 = std::min(mask.height, static_cast<int>(std::ceil(box.y_max)));
  if (x0 >= x1 || y0 >= y1)
    throw EmptyIntersection("crop box does not intersect the image");

  BinaryMask out = BinaryMask::zeros(x1 - x0, y1 - y0);
  for (int y = y0; y < y1; ++y) {
    const auto* src = &mask.foreground[static_cast<size_t>(y) * mask.width + x0];
    auto* dst = &out.foreground[static_cast<size_t>(y - y0) * out.width];
    std::copy(src, src + (x1 - x0), dst);
  }
  return out;
}

namespace {

struct UnionFind {
  std::vector<std::int32_t> parent;

  std::int32_t make() {
    parent.push_back(static_cast<std::int32_t>(parent.size()));
    return parent.back();
  }
  std::int32_t find(std::int32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // Keep the smaller root so provisional labels stay raster-ordered.
    if (a < b)
      parent[b] = a;
    else
      parent[a] = b;
  }
};

}  // namespace

ComponentLabeling connected_components(const BinaryMask& mask,
                                       Connectivity connectivity) {
  const int w = mask.width, h = mask.height;
  ComponentLabeling out;
  out.labels.assign(static_cast<size_t>(w) * h, 0);
  if (w == 0 || h == 0) return out;

  // Pass 1: provisional labels, merging with already-visited neighbours
  // (west, north-west, north, north-east for 8-connectivity).
  UnionFind uf;
  std::vector<std::int32_t> prov(static_cast<size_t>(w) * h, -1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      const size_t idx = static_cast<size_t>(y) * w + x;

      std::int32_t label = -1;
      auto merge_neighbor = [&](int nx, int ny) {
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) return;
        const std::int32_t n = prov[static_cast<size_t>(ny) * w + nx];
        if (n < 0) return;
        if (label < 0)
          label = n;
        else
          uf.unite(label, n);
      };
      merge_neighbor(x - 1, y);
      merge_neighbor(x, y - 1);
      if (connectivity == Connectivity::Eight) {
        merge_neighbor(x - 1, y - 1);
        merge_neighbor(x + 1, y - 1);
      }
      if (label < 0) label = uf.make();
      prov[idx] = label;
    }
  }

  // Pass 2: compress to dense labels 1..K in raster discovery order.
  std::vector<std::int32_t> dense(uf.parent.size(), 0);
  std::int32_t next = 0;
  for (size_t i = 0; i < out.labels.size(); ++i) {
    if (prov[i] < 0) continue;
    const std::int32_t root = uf.find(prov[i]);
    if (dense[root] == 0) dense[root] = ++next;
    out.labels[i] = dense[root];
  }
  out.sizes.assign(static_cast<size_t>(next), 0);
  for (const std::int32_t l : out.labels)
    if (l > 0) ++out.sizes[l - 1];
  return out;
}

BinaryMask isolate_largest(const BinaryMask& mask, Connectivity connectivity) {
  const ComponentLabeling cc = connected_components(mask, connectivity);
  if (cc.num_components() == 0) return BinaryMask::zeros(mask.width, mask.height);

  // Labels are assigned in raster discovery order, so the first maximal
  // label is the component whose first pixel occurs earliest.
  std::int32_t best = 1;
  for (std::int32_t k = 2; k <= cc.num_components(); ++k)
    if (cc.sizes[k - 1] > cc.sizes[best - 1]) best = k;

  BinaryMask out = BinaryMask::zeros(mask.width, mask.height);
  for (size_t i = 0; i < out.foreground.size(); ++i)
    out.foreground[i] = (cc.labels[i] == best) ? 1 : 0;
  return out;
}

BoundingBox mask_to_bbox(const BinaryMask& mask) {
  int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) throw EmptyMask("mask has no foreground pixels");
  return BoundingBox{static_cast<double>(x0), static_cast<double>(y0),
                     static_cast<double>(x1 + 1), static_cast<double>(y1 + 1)};
}

double bbox_iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace mvpt
