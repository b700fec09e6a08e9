#include "mvpt/disambiguation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "mvpt/errors.hpp"

namespace mvpt {

namespace {

// Reprojection RMSE of one keypoint slot under a swap mask; 0 when fewer
// than two views contribute (no triangulation, no residuals).
double slot_cost(const std::vector<PoseView>& views, std::uint32_t mask,
                 int own_index, int other_index, double conf_thr) {
  std::vector<Observation> obs;
  for (size_t v = 0; v < views.size(); ++v) {
    const bool swapped = (mask >> v) & 1u;
    const Point2D& p =
        views[v].pose.keypoints[swapped ? other_index : own_index];
    if (p.usable(conf_thr)) obs.push_back({views[v].calib, p});
  }
  if (obs.size() < 2) return 0.0;
  try {
    return triangulate_point(obs, conf_thr).reprojection_rmse;
  } catch (const DegenerateGeometry&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

LRResolution resolve_lr(const std::vector<PoseView>& views,
                        const std::vector<SymmetricPair>& pairs,
                        double confidence_threshold) {
  const int n_views = static_cast<int>(views.size());
  if (n_views < 2)
    throw InsufficientViews("left/right resolution needs >= 2 views");
  if (n_views > kMaxDisambiguationViews)
    throw TooManyViews("exhaustive left/right search is bounded to " +
                       std::to_string(kMaxDisambiguationViews) + " views, got " +
                       std::to_string(n_views));

  LRResolution out;
  out.corrected.reserve(views.size());
  for (const auto& view : views) out.corrected.push_back(view.pose);
  out.swapped.assign(views.size(), std::vector<bool>(pairs.size(), false));

  // Masks in (popcount, value) order: the all-false combination is evaluated
  // first and cost ties resolve toward fewer swaps. Bit 0 (the first view)
  // is pinned to false, which cancels the global left/right relabeling.
  std::vector<std::uint32_t> masks;
  for (std::uint32_t m = 0; m < (1u << n_views); ++m)
    if ((m & 1u) == 0) masks.push_back(m);
  std::stable_sort(masks.begin(), masks.end(),
                   [](std::uint32_t a, std::uint32_t b) {
                     return std::popcount(a) < std::popcount(b);
                   });

  for (size_t p = 0; p < pairs.size(); ++p) {
    const SymmetricPair& pair = pairs[p];
    double best_cost = std::numeric_limits<double>::infinity();
    std::uint32_t best_mask = 0;
    for (const std::uint32_t mask : masks) {
      const double cost =
          slot_cost(views, mask, pair.left_index, pair.right_index,
                    confidence_threshold) +
          slot_cost(views, mask, pair.right_index, pair.left_index,
                    confidence_threshold);
      if (cost < best_cost) {
        best_cost = cost;
        best_mask = mask;
      }
    }
    if (!std::isfinite(best_cost)) best_cost = 0.0;  // nothing triangulable

    for (int v = 0; v < n_views; ++v) {
      if (!((best_mask >> v) & 1u)) continue;
      out.swapped[v][p] = true;
      std::swap(out.corrected[v].keypoints[pair.left_index],
                out.corrected[v].keypoints[pair.right_index]);
    }
    out.cost += best_cost;
  }
  return out;
}

}  // namespace mvpt
