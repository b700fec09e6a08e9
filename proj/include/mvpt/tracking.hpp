#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvpt/matching.hpp"
#include "mvpt/types.hpp"

namespace mvpt {

// Noise/covariance constants of the constant-velocity box filter. The
// defaults are the ones the standard SORT tracker ships with; override per
// tracker if needed.
struct KalmanNoise {
  Eigen::Vector4d measurement = {1.0, 1.0, 10.0, 10.0};
  Eigen::Matrix<double, 7, 1> initial_covariance =
      (Eigen::Matrix<double, 7, 1>() << 10, 10, 10, 10, 1e4, 1e4, 1e4)
          .finished();
  Eigen::Matrix<double, 7, 1> process =
      (Eigen::Matrix<double, 7, 1>() << 1, 1, 1, 1, 0.01, 0.01, 1e-4)
          .finished();
};

struct TrackerConfig {
  int max_age = 1;     // frames a track may coast before deletion
  int min_hits = 3;    // detections needed before a track is emitted
  double iou_threshold = 0.3;
  KalmanNoise noise;

  void validate() const;  // throws InvalidConfig
};

// Constant-velocity Kalman filter over [u, v, s, r, du, dv, ds]: box center,
// area, aspect ratio (constant), and their velocities.
class KalmanBoxFilter {
 public:
  KalmanBoxFilter(const BoundingBox& box, const KalmanNoise& noise);

  void predict();
  void update(const BoundingBox& box);

  BoundingBox box() const;
  const Eigen::Matrix<double, 7, 1>& state() const { return x_; }
  const Eigen::Matrix<double, 7, 7>& covariance() const { return p_; }

 private:
  Eigen::Matrix<double, 7, 1> x_;
  Eigen::Matrix<double, 7, 7> p_;
  Eigen::Matrix<double, 7, 7> f_;  // transition
  Eigen::Matrix<double, 4, 7> h_;  // measurement
  Eigen::Matrix<double, 7, 7> q_;  // process noise
  Eigen::Matrix<double, 4, 4> r_;  // measurement noise
};

struct TrackState {
  TrackState(int id, const BoundingBox& box, const KalmanNoise& noise)
      : track_id(id), filter(box, noise) {}

  int track_id;
  KalmanBoxFilter filter;
  int hits = 1;  // frames matched to a detection, spawning frame included
  int age = 0;
  int time_since_update = 0;
  std::optional<int> global_id;
};

struct Detection {
  BoundingBox box;
  double confidence = 1.0;
};

struct TrackOutput {
  BoundingBox box;
  int track_id = -1;
};

struct StepResult {
  std::vector<TrackOutput> emitted;
  // Per input detection, the track it was folded into (matched track or the
  // freshly spawned one). Frame-0 values are what global-ID propagation
  // binds against.
  std::vector<int> det_track_ids;
};

// One camera's SORT tracker. Stateful; frames must arrive in order.
// Deterministic: no RNG, ids strictly increasing, never reused.
class SortTracker {
 public:
  explicit SortTracker(const TrackerConfig& config = {});

  // Predict, associate by IoU (Hungarian), update matches, spawn tracks for
  // unmatched detections, drop tracks older than max_age. Throws
  // NonFiniteDetection on NaN/inf box coordinates.
  StepResult step(const std::vector<Detection>& detections);

  const std::vector<TrackState>& tracks() const { return tracks_; }
  int frames_processed() const { return frame_count_; }

 private:
  TrackerConfig config_;
  std::vector<TrackState> tracks_;
  int next_track_id_ = 0;
  int frame_count_ = 0;
};

// Immutable binding of frame-0 tracks to global identities. Tracks born
// later carry no global id and are reported as unassigned by the pipeline.
class GlobalIdPropagator {
 public:
  // `det_track_ids` is StepResult::det_track_ids of the camera's first
  // frame; its detections must be the same ones the matcher saw. Throws
  // AssignmentMismatch when the counts disagree.
  void bind_first_frame(const std::string& camera_id,
                        const std::vector<int>& det_track_ids,
                        const GlobalAssignment& assignment);

  std::optional<int> global_id(const std::string& camera_id,
                               int track_id) const;

 private:
  std::map<std::string, std::map<int, int>> binding_;
};

}  // namespace mvpt
