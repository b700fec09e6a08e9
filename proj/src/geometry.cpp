#include "mvpt/geometry.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "mvpt/errors.hpp"
#include "mvpt/version.hpp"

namespace mvpt {

Eigen::Matrix<double, 3, 4> CameraCalibration::projection_matrix() const {
  Eigen::Matrix<double, 3, 4> rt;
  rt.leftCols<3>() = rotation;
  rt.col(3) = translation;
  return intrinsics * rt;
}

Eigen::Vector3d CameraCalibration::center() const {
  return -rotation.transpose() * translation;
}

void CameraCalibration::validate(double rotation_tol) const {
  const auto& k = intrinsics;
  if (!(k(0, 0) > 0.0) || !(k(1, 1) > 0.0))
    throw CalibrationError("camera '" + camera_id +
                           "': focal lengths must be positive");
  if (k(1, 0) != 0.0 || k(2, 0) != 0.0 || k(2, 1) != 0.0)
    throw CalibrationError("camera '" + camera_id +
                           "': intrinsics must be upper-triangular");
  const double ortho =
      (rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
          .cwiseAbs()
          .maxCoeff();
  if (!(ortho < rotation_tol))
    throw CalibrationError("camera '" + camera_id +
                           "': rotation is not orthonormal");
  const double det = rotation.determinant();
  if (!(std::abs(det - 1.0) <= rotation_tol))
    throw CalibrationError("camera '" + camera_id +
                           "': rotation determinant is not 1");
  if (image_width <= 0 || image_height <= 0)
    throw CalibrationError("camera '" + camera_id +
                           "': image dimensions must be positive");
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

Point2D project(const CameraCalibration& calib, const Point3D& p) {
  const Eigen::Vector3d cam =
      calib.rotation * Eigen::Vector3d(p.x, p.y, p.z) + calib.translation;
  // NaN depth must also land here, hence the negated comparison.
  if (!(cam.z() > kMinCameraDepth))
    throw PointBehindCamera("point at camera-frame depth " +
                            std::to_string(cam.z()) + " for camera '" +
                            calib.camera_id + "'");
  const Eigen::Vector3d uvw = calib.intrinsics * cam;
  return Point2D{uvw.x() / uvw.z(), uvw.y() / uvw.z(), 1.0};
}

double reprojection_error(const CameraCalibration& calib, const Point3D& p,
                          const Point2D& obs) {
  const Point2D r = project(calib, p);
  return std::hypot(r.u - obs.u, r.v - obs.v);
}

namespace {

// Isotropic pixel-space conditioning for one view: translate by the
// principal point, scale by 2/(fx+fy). Brings DLT rows to O(1) magnitude.
Eigen::Matrix3d conditioning_transform(const CameraCalibration& calib) {
  const double s = 2.0 / (calib.intrinsics(0, 0) + calib.intrinsics(1, 1));
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(0, 0) = s;
  t(1, 1) = s;
  t(0, 2) = -s * calib.intrinsics(0, 2);
  t(1, 2) = -s * calib.intrinsics(1, 2);
  return t;
}

}  // namespace

TriangulationResult triangulate_point(
    const std::vector<Observation>& observations,
    double confidence_threshold) {
  std::vector<const Observation*> used;
  used.reserve(observations.size());
  for (const auto& obs : observations)
    if (obs.point.usable(confidence_threshold)) used.push_back(&obs);

  if (used.size() < 2)
    throw InsufficientViews("triangulation needs >= 2 usable observations, got " +
                            std::to_string(used.size()));

  Eigen::MatrixXd design(2 * used.size(), 4);
  for (size_t i = 0; i < used.size(); ++i) {
    const Eigen::Matrix3d t = conditioning_transform(*used[i]->calib);
    const Eigen::Matrix<double, 3, 4> p = t * used[i]->calib->projection_matrix();
    const Eigen::Vector3d x =
        t * Eigen::Vector3d(used[i]->point.u, used[i]->point.v, 1.0);
    design.row(2 * i + 0) = x(0) * p.row(2) - p.row(0);
    design.row(2 * i + 1) = x(1) * p.row(2) - p.row(1);
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  const int n = static_cast<int>(sv.size());
  if (sv(n - 2) - sv(n - 1) <= kDegeneracyTol * sv(0))
    throw DegenerateGeometry(
        "DLT nullspace is not unique (rays effectively parallel)");

  const Eigen::Vector4d h = svd.matrixV().col(3);
  if (std::abs(h(3)) <= 1e-15 * h.head<3>().norm())
    throw DegenerateGeometry("triangulated point at infinity");

  TriangulationResult result;
  result.point = Point3D::at(h(0) / h(3), h(1) / h(3), h(2) / h(3));

  double sum_sq = 0.0;
  for (const Observation* obs : used) {
    const Eigen::Vector3d cam =
        obs->calib->rotation *
            Eigen::Vector3d(result.point.x, result.point.y, result.point.z) +
        obs->calib->translation;
    if (!(cam.z() > kMinCameraDepth)) {
      result.reprojection_rmse = std::numeric_limits<double>::infinity();
      return result;
    }
    const Eigen::Vector3d uvw = obs->calib->intrinsics * cam;
    const double du = uvw.x() / uvw.z() - obs->point.u;
    const double dv = uvw.y() / uvw.z() - obs->point.v;
    sum_sq += du * du + dv * dv;
  }
  result.reprojection_rmse =
      std::sqrt(sum_sq / static_cast<double>(used.size()));
  return result;
}

PoseTriangulation triangulate_pose(const std::vector<PoseView>& views,
                                   double confidence_threshold) {
  if (views.empty()) throw InsufficientViews("no views supplied");
  const size_t n_kp = views.front().pose.keypoints.size();
  for (const auto& view : views)
    if (view.pose.keypoints.size() != n_kp)
      throw SchemaMismatch("pose keypoint counts differ: " +
                           std::to_string(n_kp) + " vs " +
                           std::to_string(view.pose.keypoints.size()));

  PoseTriangulation out;
  out.pose.keypoints.assign(n_kp, Point3D::invalid());
  out.reprojection_rmse.assign(n_kp,
                               std::numeric_limits<double>::quiet_NaN());

  std::vector<Observation> obs;
  for (size_t k = 0; k < n_kp; ++k) {
    obs.clear();
    for (const auto& view : views) {
      const Point2D& p = view.pose.keypoints[k];
      if (p.usable(confidence_threshold)) obs.push_back({view.calib, p});
    }
    if (obs.size() < 2) continue;  // stays invalid, never fabricated
    try {
      TriangulationResult r = triangulate_point(obs, confidence_threshold);
      out.pose.keypoints[k] = r.point;
      out.reprojection_rmse[k] = r.reprojection_rmse;
    } catch (const DegenerateGeometry&) {
      // keypoint stays invalid
    }
  }
  return out;
}

std::vector<CameraCalibration> load_calibrations(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw CalibrationError("cannot open calibration file: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw CalibrationError("calibration file " + path.string() +
                           " is not valid JSON: " + e.what());
  }

  const nlohmann::json* cameras = nullptr;
  if (doc.is_array()) {
    cameras = &doc;
  } else if (doc.is_object() && doc.contains("cameras") &&
             doc["cameras"].is_array()) {
    cameras = &doc["cameras"];
  } else {
    throw CalibrationError(
        "calibration file must be a JSON array of cameras or an object with "
        "a 'cameras' array");
  }

  std::vector<CameraCalibration> result;
  for (const auto& entry : *cameras) {
    CameraCalibration c;
    try {
      c.camera_id = entry.at("camera_id").get<std::string>();
      const double fx = entry.at("fx").get<double>();
      const double fy = entry.at("fy").get<double>();
      const double cx = entry.at("cx").get<double>();
      const double cy = entry.at("cy").get<double>();
      c.intrinsics << fx, 0, cx, 0, fy, cy, 0, 0, 1;
      const auto rot = entry.at("rotation").get<std::vector<double>>();
      const auto tr = entry.at("translation").get<std::vector<double>>();
      if (rot.size() != 9)
        throw CalibrationError("rotation must have 9 entries (row-major)");
      if (tr.size() != 3)
        throw CalibrationError("translation must have 3 entries");
      for (int r = 0; r < 3; ++r)
        for (int col = 0; col < 3; ++col) c.rotation(r, col) = rot[3 * r + col];
      c.translation = Eigen::Vector3d(tr[0], tr[1], tr[2]);
      c.image_width = entry.at("width").get<int>();
      c.image_height = entry.at("height").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw CalibrationError("malformed camera entry in " + path.string() +
                             ": " + e.what());
    }

    if (entry.contains("distortion") && !entry["distortion"].is_null()) {
      for (const auto& d : entry["distortion"])
        if (d.get<double>() != 0.0)
          throw CalibrationError(
              "camera '" + c.camera_id +
              "': nonzero distortion coefficients are not supported; "
              "rectify the footage and supply distortion-free calibration");
    }

    c.validate(1e-6);
    c.rotation = orthonormalize(c.rotation);
    c.validate(1e-9);
    result.push_back(std::move(c));
  }
  if (result.empty())
    throw CalibrationError("calibration file contains no cameras");
  return result;
}

void save_calibrations(const std::filesystem::path& path,
                       const std::vector<CameraCalibration>& cameras) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : cameras) {
    nlohmann::json entry;
    entry["camera_id"] = c.camera_id;
    entry["fx"] = c.intrinsics(0, 0);
    entry["fy"] = c.intrinsics(1, 1);
    entry["cx"] = c.intrinsics(0, 2);
    entry["cy"] = c.intrinsics(1, 2);
    std::vector<double> rot(9);
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 3; ++col) rot[3 * r + col] = c.rotation(r, col);
    entry["rotation"] = rot;
    entry["translation"] =
        std::vector<double>{c.translation.x(), c.translation.y(),
                            c.translation.z()};
    entry["width"] = c.image_width;
    entry["height"] = c.image_height;
    arr.push_back(std::move(entry));
  }
  nlohmann::json doc;
  doc["format_version"] = kFormatVersion;
  doc["cameras"] = std::move(arr);

  std::ofstream out(path);
  if (!out)
    throw CalibrationError("cannot write calibration file: " + path.string());
  out << doc.dump(2) << "\n";
}

}  // namespace mvpt
