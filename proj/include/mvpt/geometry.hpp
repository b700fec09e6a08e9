#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "mvpt/types.hpp"

namespace mvpt {

// Pinhole camera: x ~ K (R p + t), K upper-triangular, R world-to-camera.
struct CameraCalibration {
  std::string camera_id;
  Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  int image_width = 0;
  int image_height = 0;

  Eigen::Matrix<double, 3, 4> projection_matrix() const;
  Eigen::Vector3d center() const;  // camera center in world coordinates

  // Throws CalibrationError unless K is upper-triangular with positive focal
  // lengths, R is orthonormal with det 1 (to `rotation_tol`), and the image
  // dimensions are positive.
  void validate(double rotation_tol = 1e-9) const;
};

// Snaps an approximately orthonormal matrix to the nearest rotation (SVD
// projection, det forced to +1).
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& m);

struct Observation {
  const CameraCalibration* calib = nullptr;
  Point2D point;
};

struct PoseView {
  const CameraCalibration* calib = nullptr;
  Pose2D pose;
};

inline constexpr double kMinCameraDepth = 1e-9;
inline constexpr double kDefaultConfidenceThreshold = 0.5;
// Relative gap (w.r.t. the largest singular value) below which the two
// smallest singular values of the DLT system are considered tied.
inline constexpr double kDegeneracyTol = 1e-12;

// Perspective projection. Throws PointBehindCamera when the camera-frame
// depth is <= kMinCameraDepth (or not finite).
Point2D project(const CameraCalibration& calib, const Point3D& p);

// Pixel distance between project(calib, p) and obs.
double reprojection_error(const CameraCalibration& calib, const Point3D& p,
                          const Point2D& obs);

struct TriangulationResult {
  Point3D point;
  // RMSE of reprojection over the observations used. +inf when the solution
  // lands behind any used camera (the reprojection is meaningless there);
  // identity matching relies on that to reject impossible pairings.
  double reprojection_rmse = 0.0;
};

// Homogeneous DLT over all observations with confidence >= threshold.
// Rows are conditioned per view with an isotropic pixel transform derived
// from the intrinsics before the SVD. Throws InsufficientViews with < 2
// usable observations, DegenerateGeometry when the stacked system has no
// unique null direction (effectively parallel rays).
TriangulationResult triangulate_point(
    const std::vector<Observation>& observations,
    double confidence_threshold = kDefaultConfidenceThreshold);

struct PoseTriangulation {
  Pose3D pose;
  // Per keypoint, NaN where the keypoint is invalid.
  std::vector<double> reprojection_rmse;
};

// Triangulates each keypoint independently from the views where its
// confidence passes the threshold. Keypoints with < 2 usable views (or a
// degenerate system) come back invalid. Throws SchemaMismatch when the
// poses disagree on keypoint count.
PoseTriangulation triangulate_pose(
    const std::vector<PoseView>& views,
    double confidence_threshold = kDefaultConfidenceThreshold);

// Calibration file I/O. Accepts either a bare JSON array of camera objects
// or {"format_version": 1, "cameras": [...]}. Rotations are validated to
// 1e-6 and then snapped to exact rotations. A "distortion" block, if present
// with any nonzero entry, is rejected.
std::vector<CameraCalibration> load_calibrations(
    const std::filesystem::path& path);
void save_calibrations(const std::filesystem::path& path,
                       const std::vector<CameraCalibration>& cameras);

}  // namespace mvpt
