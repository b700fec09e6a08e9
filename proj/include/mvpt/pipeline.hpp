#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mvpt/geometry.hpp"
#include "mvpt/io.hpp"
#include "mvpt/matching.hpp"
#include "mvpt/metrics.hpp"
#include "mvpt/tracking.hpp"

namespace mvpt {

struct PipelineConfig {
  double confidence_threshold = kDefaultConfidenceThreshold;
  double matching_gate = 25.0;  // px, first-frame identity gating
  TrackerConfig tracker;
  bool resolve_lr = false;

  void validate() const;
};

// Stateful per-frame pipeline: first frame fixes global identities by
// cross-view matching, every frame advances one SORT tracker per camera,
// detections inherit global ids through their tracks, and each global id
// seen by >= 2 live views is triangulated (optionally after left/right
// resolution). Frames must arrive in increasing frame order; processing a
// stream in one pass equals concatenating per-frame calls.
class Pipeline {
 public:
  Pipeline(std::vector<CameraCalibration> calibrations, PipelineConfig config);

  // Throws CalibrationError for unknown cameras, MissingBBox for detections
  // without a usable box, and InsufficientViews when the first frame has
  // detections in fewer than two views.
  std::vector<TrajectoryEntry> step(const FrameRecord& record);

  bool started() const { return started_; }
  // Frame-0 identity assignment; meaningful once started().
  const GlobalAssignment& first_frame_assignment() const { return first_; }
  const std::vector<CameraCalibration>& calibrations() const { return calibs_; }

 private:
  std::vector<CameraCalibration> calibs_;
  PipelineConfig config_;
  std::map<std::string, SortTracker> trackers_;
  GlobalIdPropagator propagator_;
  GlobalAssignment first_;
  bool started_ = false;
};

struct PipelineResult {
  TrajectorySet trajectories;
  GlobalAssignment first_frame;
};

// One-pass convenience wrapper around Pipeline::step; fills the trajectory
// metadata with the config echo and camera ids.
PipelineResult run_pipeline(const std::vector<CameraCalibration>& calibrations,
                            const std::vector<FrameRecord>& frames,
                            const PipelineConfig& config = {});

// Replaces each detection's bbox with the tight bounds of the largest
// connected component of its silhouette mask. Detections without a mask
// reference pass through unchanged. Mask paths resolve relative to
// `base_dir`. Throws MaskDecodeError (naming the path) and EmptyMask.
FrameRecord ingest_masks(const FrameRecord& record,
                         const std::filesystem::path& base_dir);

// Aligns predicted global ids to ground-truth ids (Hungarian on mean 3D
// keypoint distance over overlapping frames) and emits one evaluation pair
// per ground-truth (frame, individual). Ground-truth poses with no aligned
// prediction in that frame pair against an all-invalid pose, so misses stay
// visible in PCK. Returns the pairs and the id mapping.
struct EvalAlignment {
  std::vector<EvalPair3D> pairs;
  std::map<int, int> predicted_to_gt;  // aligned ids
  int unmatched_predicted = 0;         // predicted ids with no counterpart
};
EvalAlignment build_eval_pairs(const TrajectorySet& predicted,
                               const TrajectorySet& ground_truth);

}  // namespace mvpt
