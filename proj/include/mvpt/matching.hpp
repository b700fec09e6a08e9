#pragma once

#include <map>
#include <string>
#include <vector>

#include "mvpt/geometry.hpp"
#include "mvpt/types.hpp"

namespace mvpt {

// All detections of one camera in one frame, in arbitrary order.
struct ViewDetections {
  std::string camera_id;
  std::vector<Pose2D> poses;
};

// Output of first-frame matching: per camera, per local detection index,
// the global identity. Global ids are dense 0..N-1 and appear at most once
// per camera.
struct GlobalAssignment {
  std::map<std::string, std::vector<int>> global_id;  // camera -> per index
  int num_global_ids = 0;
  double total_cost = 0.0;  // summed accepted reprojection costs, pixels
};

struct MatchingConfig {
  double confidence_threshold = kDefaultConfidenceThreshold;
  // Candidates whose best cluster cost (mean per-keypoint reprojection RMSE,
  // px) exceeds this bound start a new identity instead.
  double gating_threshold = 25.0;
};

// Assigns a global ID to every detection by greedy view-by-view clustering:
// the view with the most detections seeds the identities, remaining views
// are folded in by Hungarian assignment on triangulation consistency
// (cost[i][j] = mean reprojection RMSE of triangulating candidate pose i
// jointly with cluster j). Ties on detection count are broken toward the
// lexicographically smallest camera_id.
// Throws SingleView (< 2 views) and NoCalibration (camera_id not covered).
GlobalAssignment match_identities(const std::vector<ViewDetections>& views,
                                  const std::vector<CameraCalibration>& calibs,
                                  const MatchingConfig& config = {});

}  // namespace mvpt
