#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mvpt/geometry.hpp"
#include "mvpt/io.hpp"
#include "mvpt/matching.hpp"
#include "mvpt/silhouette.hpp"
#include "mvpt/types.hpp"

namespace mvpt {

// Body-frame keypoint offsets (meters): x anterior, y left, z up. The
// default template is pigeon-sized; only the relative geometry matters for
// the toolkit's tests.
struct BirdTemplate {
  std::array<Eigen::Vector3d, kNumKeypoints> offsets;
  // Capsule/disk radii for silhouette rendering. The body radius must cover
  // the shoulders (~0.046 m off the beak-tail axis) so every keypoint falls
  // inside the rendered silhouette.
  double body_radius = 0.055;
  double head_radius = 0.035;

  static const BirdTemplate& pigeon();
};

// Walking height of the body origin above the ground plane.
inline constexpr double kBodyHeight = 0.10;
// Default collision-avoidance distance between individuals.
inline constexpr double kDefaultMinSeparation = 0.35;
// Padding around projected keypoints when deriving detection boxes.
inline constexpr double kBboxPaddingPx = 12.0;

struct SceneConfig {
  int n_individuals = 1;  // 1..10
  int n_frames = 1;
  double arena_radius = 2.0;  // meters
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;   // px
  double dropout_prob = 0.0;  // per keypoint
  double swap_prob = 0.0;     // per symmetric pair per view
  double min_separation = kDefaultMinSeparation;  // meters

  void validate() const;  // throws InvalidConfig
};

// Evenly spaced cameras on a circle of `radius` at `height`, all aimed at
// the arena center, square images with the principal ray through the
// center. Throws InvalidConfig for n_cameras < 2 or non-positive geometry.
std::vector<CameraCalibration> generate_rig(int n_cameras, double radius,
                                            double height, int image_size);

// What one camera saw of one individual in one frame.
struct ViewTruth {
  Pose2D exact;     // noiseless projection; confidence 1 where visible
  Pose2D observed;  // after noise, dropout, and swaps
  BoundingBox box;  // padded detection box
  std::vector<bool> pair_swapped;  // per default symmetric pair
  bool visible = false;            // any keypoint projects into the image
};

struct IndividualTruth {
  Pose3D pose;                   // world-frame keypoints
  Eigen::Vector3d position;      // body origin
  double heading = 0.0;          // radians, world yaw
  std::vector<ViewTruth> views;  // filled by render_detections
};

struct FrameTruth {
  std::vector<IndividualTruth> individuals;
};

struct GroundTruth {
  SceneConfig config;
  std::vector<FrameTruth> frames;
};

// Seeded random-walk trajectories with heading-aligned bodies, bounded to
// the arena, rejection-resampled to keep pairwise distance >=
// min_separation (1000 retries, then InvalidConfig). Identical configs
// produce identical output.
GroundTruth generate_scene(const SceneConfig& config);

// Detections of one frame across the whole rig. Detections are emitted in
// individual order; identities[view][d] maps detection d back to its
// individual (individuals invisible in a view are skipped).
struct RenderedFrame {
  std::vector<ViewDetections> views;
  std::vector<std::vector<int>> identities;
};

// Projects all keypoints into every view, applies Gaussian pixel noise,
// dropout (confidence 0), and symmetric-pair swaps, recording everything
// in `gt`. Deterministic per seed.
std::vector<RenderedFrame> render_detections(GroundTruth& gt,
                                             const std::vector<CameraCalibration>& rig,
                                             double noise_sigma,
                                             double dropout_prob,
                                             double swap_prob,
                                             std::uint64_t seed);

// Pipeline-format frame records for a rendered scene: one detection per
// visible individual per view, in the same order as RenderedFrame.
std::vector<FrameRecord> to_frame_records(
    const GroundTruth& gt, const std::vector<CameraCalibration>& rig,
    const std::vector<RenderedFrame>& rendered);

struct MaskRenderOptions {
  int speckle_count = 0;  // small separate noise blobs per mask
  std::uint64_t seed = 0;
};

// Silhouette of one individual in one view: a thick capsule along the
// beak-tail axis plus a head disk at the eye midpoint. Fully off-frustum
// individuals give an empty mask. Speckles are kept strictly smaller than
// and disconnected from the body component.
BinaryMask render_mask(const Pose3D& pose, const CameraCalibration& calib,
                       const BirdTemplate& tmpl = BirdTemplate::pigeon(),
                       const MaskRenderOptions& options = {});

// [frame][individual][view] masks for the whole scene.
std::vector<std::vector<std::vector<BinaryMask>>> render_masks(
    const GroundTruth& gt, const std::vector<CameraCalibration>& rig,
    const MaskRenderOptions& options = {});

}  // namespace mvpt
