#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string_view>
#include <vector>

namespace mvpt {

// Canonical 9-keypoint bird skeleton. The order is fixed and shared by every
// file format and API in the toolkit.
enum Keypoint : int {
  kBeak = 0,
  kNose,
  kEyeLeft,
  kEyeRight,
  kShoulderLeft,
  kShoulderRight,
  kKeelTop,
  kKeelBottom,
  kTail,
};

inline constexpr int kNumKeypoints = 9;

inline constexpr std::array<std::string_view, kNumKeypoints> kKeypointNames = {
    "beak",          "nose",           "eye_left",
    "eye_right",     "shoulder_left",  "shoulder_right",
    "keel_top",      "keel_bottom",    "tail",
};

// A 2D image observation. confidence in [0,1]; confidence 0 means the
// keypoint is missing (dropped / not detected) in this view.
struct Point2D {
  double u = 0.0;
  double v = 0.0;
  double confidence = 0.0;

  bool usable(double threshold) const {
    return confidence >= threshold && std::isfinite(u) && std::isfinite(v);
  }
};

// A triangulated world point. Invalid points carry NaN coordinates so they
// can never be mistaken for real geometry.
struct Point3D {
  double x = std::numeric_limits<double>::quiet_NaN();
  double y = std::numeric_limits<double>::quiet_NaN();
  double z = std::numeric_limits<double>::quiet_NaN();
  bool valid = false;

  static Point3D invalid() { return Point3D{}; }
  static Point3D at(double x, double y, double z) { return {x, y, z, true}; }
};

struct Pose2D {
  std::vector<Point2D> keypoints;
};

struct Pose3D {
  std::vector<Point3D> keypoints;
};

// Axis-aligned pixel box, half-open on the max edges.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool finite() const {
    return std::isfinite(x_min) && std::isfinite(y_min) &&
           std::isfinite(x_max) && std::isfinite(y_max);
  }
  bool valid() const { return finite() && x_min < x_max && y_min < y_max; }
};

inline double euclidean(const Point2D& a, const Point2D& b) {
  return std::hypot(a.u - b.u, a.v - b.v);
}

inline double euclidean(const Point3D& a, const Point3D& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace mvpt
