#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mvpt/types.hpp"

namespace mvpt {

// One prediction/ground-truth pose pair. 2D evaluation needs the ground
// truth bounding box of the same individual and frame for the PCK scale.
struct EvalPair2D {
  Pose2D predicted;
  Pose2D ground_truth;
  BoundingBox gt_bbox;
};

struct EvalPair3D {
  Pose3D predicted;
  Pose3D ground_truth;
};

// A 2D keypoint participates when its confidence is > 0 and finite; a 3D
// keypoint when its valid flag is set. RMSE/median run over keypoints valid
// on both sides; PCK additionally counts prediction misses (valid ground
// truth, invalid prediction) as incorrect.
struct MetricValues {
  double rmse = 0.0;
  double median = 0.0;
  double pck05 = 0.0;  // percent
  double pck10 = 0.0;  // percent
  size_t n_evaluated = 0;  // keypoints valid in both
  size_t n_missing = 0;    // valid ground truth, invalid prediction
};

struct MetricsReport {
  MetricValues overall;
  std::vector<MetricValues> per_keypoint;  // indexed by keypoint
  std::string unit;                        // "px" or "mm"
};

// Square root of the mean squared Euclidean keypoint error. Throws
// NoValidKeypoints when no keypoint is valid on both sides.
double rmse(const std::vector<EvalPair2D>& pairs);
double rmse(const std::vector<EvalPair3D>& pairs);

// Median keypoint error; even counts average the two central values.
double median_error(const std::vector<EvalPair2D>& pairs);
double median_error(const std::vector<EvalPair3D>& pairs);

// Percentage of correct keypoints. `fraction` must be 0.05 or 0.10.
// Threshold per pair: fraction x the ground-truth box's largest dimension
// (2D) or fraction x the maximum pairwise distance among valid ground-truth
// keypoints (3D). A keypoint is correct when its error is <= threshold
// (inclusive). Throws MissingBBox (2D pair with a degenerate box) and
// DegenerateScale (3D ground truth with < 2 valid keypoints).
double pck(const std::vector<EvalPair2D>& pairs, double fraction);
double pck(const std::vector<EvalPair3D>& pairs, double fraction);

// All four metrics overall and per keypoint. 3D distances are reported in
// millimeters (poses are in meters), 2D in pixels.
MetricsReport per_keypoint_report(const std::vector<EvalPair2D>& pairs);
MetricsReport per_keypoint_report(const std::vector<EvalPair3D>& pairs);

// Fixed-layout table with rows RMSE, Median, PCK05, PCK10; one column per
// keypoint plus an overall column. Formatting is byte-stable.
std::string format_report_table(const MetricsReport& report);

}  // namespace mvpt
