#include "mvpt/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mvpt/disambiguation.hpp"
#include "mvpt/errors.hpp"
#include "mvpt/rng.hpp"

namespace mvpt {

namespace {

constexpr int kMaxPlacementTries = 1000;
constexpr double kHeadingStepSigma = 0.2;  // radians per frame
constexpr double kArenaMarginFactor = 0.95;

Eigen::Matrix3d yaw_rotation(double heading) {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  Eigen::Matrix3d r;
  r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return r;
}

Pose3D pose_from_state(const Eigen::Vector3d& position, double heading,
                       const BirdTemplate& tmpl) {
  const Eigen::Matrix3d r = yaw_rotation(heading);
  Pose3D pose;
  pose.keypoints.resize(kNumKeypoints);
  for (int k = 0; k < kNumKeypoints; ++k) {
    const Eigen::Vector3d p = position + r * tmpl.offsets[k];
    pose.keypoints[k] = Point3D::at(p.x(), p.y(), p.z());
  }
  return pose;
}

bool far_enough(const Eigen::Vector3d& p, const std::vector<Eigen::Vector3d>& others,
                double min_separation) {
  for (const auto& q : others) {
    if ((p.head<2>() - q.head<2>()).norm() < min_separation) return false;
  }
  return true;
}

}  // namespace

const BirdTemplate& BirdTemplate::pigeon() {
  static const BirdTemplate tmpl = [] {
    BirdTemplate t;
    auto set = [&](Keypoint k, double x, double y, double z) {
      t.offsets[k] = Eigen::Vector3d(x, y, z);
    };
    set(kBeak, 0.180, 0.000, 0.050);
    set(kNose, 0.155, 0.000, 0.065);
    set(kEyeLeft, 0.135, 0.015, 0.075);
    set(kEyeRight, 0.135, -0.015, 0.075);
    set(kShoulderLeft, 0.050, 0.040, 0.055);
    set(kShoulderRight, 0.050, -0.040, 0.055);
    set(kKeelTop, 0.060, 0.000, 0.020);
    set(kKeelBottom, 0.010, 0.000, -0.015);
    set(kTail, -0.120, 0.000, 0.010);
    return t;
  }();
  return tmpl;
}

void SceneConfig::validate() const {
  if (n_individuals < 1 || n_individuals > 10)
    throw InvalidConfig("n_individuals must be in [1, 10], got " +
                        std::to_string(n_individuals));
  if (n_frames < 1)
    throw InvalidConfig("n_frames must be >= 1, got " + std::to_string(n_frames));
  if (!(arena_radius > 0.0))
    throw InvalidConfig("arena_radius must be positive");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw InvalidConfig("noise_sigma must be finite and >= 0");
  if (!(dropout_prob >= 0.0 && dropout_prob <= 1.0))
    throw InvalidConfig("dropout_prob must be in [0, 1]");
  if (!(swap_prob >= 0.0 && swap_prob <= 1.0))
    throw InvalidConfig("swap_prob must be in [0, 1]");
  if (!(min_separation >= 0.0) || !std::isfinite(min_separation))
    throw InvalidConfig("min_separation must be finite and >= 0");
}

std::vector<CameraCalibration> generate_rig(int n_cameras, double radius,
                                            double height, int image_size) {
  if (n_cameras < 2)
    throw InvalidConfig("a rig needs at least 2 cameras, got " +
                        std::to_string(n_cameras));
  if (!(radius > 0.0) || image_size < 16)
    throw InvalidConfig("rig radius must be positive and image_size >= 16");

  std::vector<CameraCalibration> rig;
  rig.reserve(static_cast<std::size_t>(n_cameras));
  const Eigen::Vector3d target(0.0, 0.0, 0.0);
  const Eigen::Vector3d world_up(0.0, 0.0, 1.0);
  for (int i = 0; i < n_cameras; ++i) {
    const double angle = 2.0 * M_PI * static_cast<double>(i) / n_cameras;
    const Eigen::Vector3d center(radius * std::cos(angle),
                                 radius * std::sin(angle), height);

    Eigen::Vector3d z_cam = (target - center).normalized();
    Eigen::Vector3d x_cam = z_cam.cross(world_up);
    if (x_cam.norm() < 1e-12) {
      // Looking straight down: any horizontal axis works; pick world x.
      x_cam = Eigen::Vector3d(1.0, 0.0, 0.0);
    }
    x_cam.normalize();
    const Eigen::Vector3d y_cam = z_cam.cross(x_cam).normalized();

    CameraCalibration calib;
    calib.camera_id = "cam" + std::to_string(i);
    calib.image_width = image_size;
    calib.image_height = image_size;
    calib.intrinsics = Eigen::Matrix3d::Identity();
    calib.intrinsics(0, 0) = static_cast<double>(image_size);
    calib.intrinsics(1, 1) = static_cast<double>(image_size);
    calib.intrinsics(0, 2) = image_size / 2.0;
    calib.intrinsics(1, 2) = image_size / 2.0;
    calib.rotation.row(0) = x_cam.transpose();
    calib.rotation.row(1) = y_cam.transpose();
    calib.rotation.row(2) = z_cam.transpose();
    calib.translation = -calib.rotation * center;
    calib.validate();
    rig.push_back(std::move(calib));
  }
  return rig;
}

GroundTruth generate_scene(const SceneConfig& config) {
  config.validate();
  const BirdTemplate& tmpl = BirdTemplate::pigeon();
  Rng rng(config.seed);

  const int n = config.n_individuals;
  const double bound = config.arena_radius * kArenaMarginFactor;

  std::vector<double> speeds(n);
  std::vector<double> headings(n);
  std::vector<Eigen::Vector3d> positions(n);
  for (int i = 0; i < n; ++i) {
    speeds[i] = rng.uniform(0.005, 0.02);
    headings[i] = rng.uniform(0.0, 2.0 * M_PI);
  }
  for (int i = 0; i < n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementTries; ++attempt) {
      const double a = rng.uniform(0.0, 2.0 * M_PI);
      const double r = bound * std::sqrt(rng.uniform(0.0, 1.0));
      const Eigen::Vector3d p(r * std::cos(a), r * std::sin(a), kBodyHeight);
      std::vector<Eigen::Vector3d> placed_so_far(positions.begin(),
                                                 positions.begin() + i);
      if (far_enough(p, placed_so_far, config.min_separation)) {
        positions[i] = p;
        placed = true;
        break;
      }
    }
    if (!placed)
      throw InvalidConfig(
          "could not place " + std::to_string(n) + " individuals with "
          "min_separation " + std::to_string(config.min_separation) +
          " inside arena_radius " + std::to_string(config.arena_radius));
  }

  GroundTruth gt;
  gt.config = config;
  gt.frames.resize(static_cast<std::size_t>(config.n_frames));
  for (int f = 0; f < config.n_frames; ++f) {
    if (f > 0) {
      for (int i = 0; i < n; ++i) {
        bool moved = false;
        for (int attempt = 0; attempt < kMaxPlacementTries; ++attempt) {
          const double h = headings[i] + rng.normal(0.0, kHeadingStepSigma);
          Eigen::Vector3d p = positions[i];
          p.x() += speeds[i] * std::cos(h);
          p.y() += speeds[i] * std::sin(h);
          std::vector<Eigen::Vector3d> others;
          others.reserve(static_cast<std::size_t>(n - 1));
          for (int j = 0; j < n; ++j)
            if (j != i) others.push_back(positions[j]);
          if (p.head<2>().norm() <= bound &&
              far_enough(p, others, config.min_separation)) {
            headings[i] = h;
            positions[i] = p;
            moved = true;
            break;
          }
        }
        // A blocked individual stands still for this frame; heading is kept
        // so the walk can resume next frame.
        (void)moved;
      }
    }
    FrameTruth& frame = gt.frames[static_cast<std::size_t>(f)];
    frame.individuals.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      IndividualTruth& ind = frame.individuals[static_cast<std::size_t>(i)];
      ind.position = positions[i];
      ind.heading = headings[i];
      ind.pose = pose_from_state(positions[i], headings[i], tmpl);
    }
  }
  return gt;
}

std::vector<RenderedFrame> render_detections(GroundTruth& gt,
                                             const std::vector<CameraCalibration>& rig,
                                             double noise_sigma,
                                             double dropout_prob,
                                             double swap_prob,
                                             std::uint64_t seed) {
  if (rig.size() < 2) throw InvalidConfig("rendering needs at least 2 cameras");
  Rng rng(seed);
  const auto pairs = default_symmetric_pairs();

  std::vector<RenderedFrame> frames;
  frames.reserve(gt.frames.size());
  for (auto& frame : gt.frames) {
    RenderedFrame rendered;
    rendered.views.resize(rig.size());
    rendered.identities.resize(rig.size());
    for (std::size_t v = 0; v < rig.size(); ++v)
      rendered.views[v].camera_id = rig[v].camera_id;

    for (std::size_t i = 0; i < frame.individuals.size(); ++i) {
      IndividualTruth& ind = frame.individuals[i];
      ind.views.assign(rig.size(), ViewTruth{});
      for (std::size_t v = 0; v < rig.size(); ++v) {
        const CameraCalibration& calib = rig[v];
        ViewTruth& vt = ind.views[v];
        vt.exact.keypoints.assign(kNumKeypoints, Point2D{});
        for (int k = 0; k < kNumKeypoints; ++k) {
          const Point3D& p = ind.pose.keypoints[static_cast<std::size_t>(k)];
          Point2D proj;
          proj.confidence = 0.0;
          try {
            const Point2D uv = project(calib, p);
            if (uv.u >= 0.0 && uv.u < calib.image_width && uv.v >= 0.0 &&
                uv.v < calib.image_height) {
              proj.u = uv.u;
              proj.v = uv.v;
              proj.confidence = 1.0;
              vt.visible = true;
            }
          } catch (const PointBehindCamera&) {
          }
          vt.exact.keypoints[static_cast<std::size_t>(k)] = proj;
        }

        vt.observed = vt.exact;
        for (int k = 0; k < kNumKeypoints; ++k) {
          Point2D& obs = vt.observed.keypoints[static_cast<std::size_t>(k)];
          if (obs.confidence <= 0.0) continue;
          if (noise_sigma > 0.0) {
            obs.u += rng.normal(0.0, noise_sigma);
            obs.v += rng.normal(0.0, noise_sigma);
          }
          if (dropout_prob > 0.0 && rng.uniform(0.0, 1.0) < dropout_prob)
            obs.confidence = 0.0;
        }
        vt.pair_swapped.assign(pairs.size(), false);
        for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
          const bool swap =
              swap_prob > 0.0 && rng.uniform(0.0, 1.0) < swap_prob;
          vt.pair_swapped[pi] = swap;
          if (swap) {
            std::swap(vt.observed.keypoints[static_cast<std::size_t>(pairs[pi].left_index)],
                      vt.observed.keypoints[static_cast<std::size_t>(pairs[pi].right_index)]);
          }
        }

        // Detection box: tight box around usable observed keypoints, padded
        // and clamped; falls back to the noiseless projection if dropout
        // removed everything.
        auto tight_box = [&](const Pose2D& pose) {
          BoundingBox b;
          bool any = false;
          for (const auto& kp : pose.keypoints) {
            if (kp.confidence <= 0.0 || !std::isfinite(kp.u) ||
                !std::isfinite(kp.v))
              continue;
            if (!any) {
              b = BoundingBox{kp.u, kp.v, kp.u, kp.v};
              any = true;
            } else {
              b.x_min = std::min(b.x_min, kp.u);
              b.y_min = std::min(b.y_min, kp.v);
              b.x_max = std::max(b.x_max, kp.u);
              b.y_max = std::max(b.y_max, kp.v);
            }
          }
          return std::pair<bool, BoundingBox>(any, b);
        };
        auto [have_box, box] = tight_box(vt.observed);
        if (!have_box) std::tie(have_box, box) = tight_box(vt.exact);
        if (have_box) {
          box.x_min = std::max(0.0, box.x_min - kBboxPaddingPx);
          box.y_min = std::max(0.0, box.y_min - kBboxPaddingPx);
          box.x_max = std::min(static_cast<double>(calib.image_width),
                               box.x_max + kBboxPaddingPx);
          box.y_max = std::min(static_cast<double>(calib.image_height),
                               box.y_max + kBboxPaddingPx);
          vt.box = box;
        }

        if (vt.visible) {
          rendered.views[v].poses.push_back(vt.observed);
          rendered.identities[v].push_back(static_cast<int>(i));
        }
      }
    }
    frames.push_back(std::move(rendered));
  }
  return frames;
}

std::vector<FrameRecord> to_frame_records(
    const GroundTruth& gt, const std::vector<CameraCalibration>& rig,
    const std::vector<RenderedFrame>& rendered) {
  std::vector<FrameRecord> frames;
  frames.reserve(rendered.size());
  for (std::size_t f = 0; f < rendered.size(); ++f) {
    FrameRecord record;
    record.frame = static_cast<int>(f);
    for (std::size_t v = 0; v < rig.size(); ++v) {
      std::vector<DetectionRecord>& dets = record.cameras[rig[v].camera_id];
      const auto& poses = rendered[f].views[v].poses;
      const auto& ids = rendered[f].identities[v];
      for (std::size_t d = 0; d < poses.size(); ++d) {
        DetectionRecord det;
        det.keypoints = poses[d];
        det.bbox = gt.frames[f]
                       .individuals[static_cast<std::size_t>(ids[d])]
                       .views[v]
                       .box;
        dets.push_back(std::move(det));
      }
    }
    frames.push_back(std::move(record));
  }
  return frames;
}

namespace {

// Distance from point p to segment [a, b].
double segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                        const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 < 1e-12) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

struct ProjectedPoint {
  bool ok = false;
  Eigen::Vector2d uv = Eigen::Vector2d::Zero();
  double depth = 0.0;
};

ProjectedPoint project_with_depth(const CameraCalibration& calib,
                                  const Eigen::Vector3d& world) {
  ProjectedPoint out;
  const Eigen::Vector3d cam = calib.rotation * world + calib.translation;
  if (!(cam.z() > kMinCameraDepth)) return out;
  const Eigen::Vector3d h = calib.intrinsics * cam;
  out.ok = true;
  out.uv = Eigen::Vector2d(h.x() / h.z(), h.y() / h.z());
  out.depth = cam.z();
  return out;
}

void fill_disk(BinaryMask& mask, const Eigen::Vector2d& c, double radius) {
  const int x0 = std::max(0, static_cast<int>(std::floor(c.x() - radius)));
  const int x1 = std::min(mask.width - 1, static_cast<int>(std::ceil(c.x() + radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(c.y() - radius)));
  const int y1 = std::min(mask.height - 1, static_cast<int>(std::ceil(c.y() + radius)));
  const double r2 = radius * radius;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - c.x();
      const double dy = y + 0.5 - c.y();
      if (dx * dx + dy * dy <= r2) mask.set(x, y, true);
    }
}

void fill_capsule(BinaryMask& mask, const Eigen::Vector2d& a,
                  const Eigen::Vector2d& b, double radius) {
  const double x_min = std::min(a.x(), b.x()) - radius;
  const double x_max = std::max(a.x(), b.x()) + radius;
  const double y_min = std::min(a.y(), b.y()) - radius;
  const double y_max = std::max(a.y(), b.y()) + radius;
  const int x0 = std::max(0, static_cast<int>(std::floor(x_min)));
  const int x1 = std::min(mask.width - 1, static_cast<int>(std::ceil(x_max)));
  const int y0 = std::max(0, static_cast<int>(std::floor(y_min)));
  const int y1 = std::min(mask.height - 1, static_cast<int>(std::ceil(y_max)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const Eigen::Vector2d p(x + 0.5, y + 0.5);
      if (segment_distance(p, a, b) <= radius) mask.set(x, y, true);
    }
}

// True if the disk at c with `radius` touches or is 8-adjacent to existing
// foreground (checked with a one-pixel guard band).
bool disk_touches(const BinaryMask& mask, const Eigen::Vector2d& c, double radius) {
  const double guard = radius + 2.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(c.x() - guard)));
  const int x1 = std::min(mask.width - 1, static_cast<int>(std::ceil(c.x() + guard)));
  const int y0 = std::max(0, static_cast<int>(std::floor(c.y() - guard)));
  const int y1 = std::min(mask.height - 1, static_cast<int>(std::ceil(c.y() + guard)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (mask.at(x, y)) return true;
  return false;
}

}  // namespace

BinaryMask render_mask(const Pose3D& pose, const CameraCalibration& calib,
                       const BirdTemplate& tmpl, const MaskRenderOptions& options) {
  BinaryMask mask = BinaryMask::zeros(calib.image_width, calib.image_height);

  auto world = [&](Keypoint k) {
    const Point3D& p = pose.keypoints[static_cast<std::size_t>(k)];
    return Eigen::Vector3d(p.x, p.y, p.z);
  };
  const auto beak = project_with_depth(calib, world(kBeak));
  const auto tail = project_with_depth(calib, world(kTail));
  const Eigen::Vector3d eye_mid = 0.5 * (world(kEyeLeft) + world(kEyeRight));
  const auto head = project_with_depth(calib, eye_mid);

  const double f = 0.5 * (calib.intrinsics(0, 0) + calib.intrinsics(1, 1));
  if (beak.ok && tail.ok) {
    const double depth = 0.5 * (beak.depth + tail.depth);
    const double r = std::max(2.0, f * tmpl.body_radius / depth);
    fill_capsule(mask, beak.uv, tail.uv, r);
  }
  if (head.ok) {
    const double r = std::max(2.0, f * tmpl.head_radius / head.depth);
    fill_disk(mask, head.uv, r);
  }

  if (options.speckle_count > 0) {
    const std::size_t body_pixels = mask.count_foreground();
    Rng rng(options.seed);
    int placed = 0;
    for (int attempt = 0; attempt < kMaxPlacementTries &&
                          placed < options.speckle_count; ++attempt) {
      const double radius = rng.uniform(1.0, 3.0);
      const Eigen::Vector2d c(rng.uniform(0.0, static_cast<double>(mask.width)),
                              rng.uniform(0.0, static_cast<double>(mask.height)));
      // Keep every speckle strictly smaller than the body so it can never
      // win the largest-component rule, and disconnected so it stays a
      // separate component.
      const double area = M_PI * radius * radius;
      if (body_pixels > 0 && area >= 0.25 * static_cast<double>(body_pixels))
        continue;
      if (body_pixels == 0) continue;
      if (disk_touches(mask, c, radius)) continue;
      fill_disk(mask, c, radius);
      ++placed;
    }
  }
  return mask;
}

std::vector<std::vector<std::vector<BinaryMask>>> render_masks(
    const GroundTruth& gt, const std::vector<CameraCalibration>& rig,
    const MaskRenderOptions& options) {
  std::vector<std::vector<std::vector<BinaryMask>>> out;
  out.reserve(gt.frames.size());
  std::uint64_t salt = 0;
  for (const auto& frame : gt.frames) {
    std::vector<std::vector<BinaryMask>> per_individual;
    per_individual.reserve(frame.individuals.size());
    for (const auto& ind : frame.individuals) {
      std::vector<BinaryMask> per_view;
      per_view.reserve(rig.size());
      for (const auto& calib : rig) {
        MaskRenderOptions local = options;
        local.seed = options.seed + (salt++);
        per_view.push_back(render_mask(ind.pose, calib, BirdTemplate::pigeon(), local));
      }
      per_individual.push_back(std::move(per_view));
    }
    out.push_back(std::move(per_individual));
  }
  return out;
}

}  // namespace mvpt
