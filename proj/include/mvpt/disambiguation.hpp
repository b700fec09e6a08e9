#pragma once

#include <vector>

#include "mvpt/geometry.hpp"
#include "mvpt/types.hpp"

namespace mvpt {

// A left/right keypoint duo subject to swap ambiguity in silhouette data.
struct SymmetricPair {
  int left_index;
  int right_index;
};

// The skeleton's two symmetric pairs: eyes and shoulders.
inline const std::vector<SymmetricPair>& default_symmetric_pairs() {
  static const std::vector<SymmetricPair> pairs = {
      {kEyeLeft, kEyeRight}, {kShoulderLeft, kShoulderRight}};
  return pairs;
}

inline constexpr int kMaxDisambiguationViews = 8;

struct LRResolution {
  std::vector<Pose2D> corrected;           // one per view, swaps applied
  std::vector<std::vector<bool>> swapped;  // [view][pair]
  double cost = 0.0;  // summed reprojection RMSE of the chosen combinations
};

// Resolves each symmetric pair independently by exhaustively evaluating all
// per-view swap combinations and keeping the one with the smallest summed
// triangulation reprojection error. The global left/right relabeling
// ambiguity (flipping every flag) is removed by fixing the first view's
// flag to false; cost ties go to the combination with fewer swaps.
// Throws InsufficientViews (< 2 views) and TooManyViews (> 8).
LRResolution resolve_lr(const std::vector<PoseView>& views,
                        const std::vector<SymmetricPair>& pairs,
                        double confidence_threshold = kDefaultConfidenceThreshold);

}  // namespace mvpt
