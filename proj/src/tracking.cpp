#include "mvpt/tracking.hpp"

#include <algorithm>
#include <cmath>

#include "mvpt/assignment.hpp"
#include "mvpt/errors.hpp"
#include "mvpt/silhouette.hpp"

namespace mvpt {

namespace {

// bbox <-> measurement [center u, center v, area s, aspect ratio r]
Eigen::Vector4d box_to_z(const BoundingBox& box) {
  // Degenerate (zero-extent) boxes are kept finite; they simply never win
  // an IoU association.
  const double w = std::max(box.width(), 1e-9);
  const double h = std::max(box.height(), 1e-9);
  return {box.x_min + w / 2.0, box.y_min + h / 2.0, w * h, w / h};
}

BoundingBox z_to_box(double u, double v, double s, double r) {
  const double w = std::sqrt(std::max(s * r, 0.0));
  const double h = (w > 0.0) ? s / w : 0.0;
  return {u - w / 2.0, v - h / 2.0, u + w / 2.0, v + h / 2.0};
}

}  // namespace

void TrackerConfig::validate() const {
  if (max_age < 1) throw InvalidConfig("max_age must be >= 1");
  if (min_hits < 1) throw InvalidConfig("min_hits must be >= 1");
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0))
    throw InvalidConfig("iou_threshold must be in (0,1)");
}

KalmanBoxFilter::KalmanBoxFilter(const BoundingBox& box,
                                 const KalmanNoise& noise) {
  f_ = Eigen::Matrix<double, 7, 7>::Identity();
  f_(0, 4) = f_(1, 5) = f_(2, 6) = 1.0;
  h_ = Eigen::Matrix<double, 4, 7>::Zero();
  h_(0, 0) = h_(1, 1) = h_(2, 2) = h_(3, 3) = 1.0;
  q_ = noise.process.asDiagonal();
  r_ = noise.measurement.asDiagonal();
  p_ = noise.initial_covariance.asDiagonal();

  x_.setZero();
  x_.head<4>() = box_to_z(box);
}

void KalmanBoxFilter::predict() {
  // Keep the predicted area from going negative.
  if (x_(6) + x_(2) <= 0.0) x_(6) = 0.0;
  x_ = f_ * x_;
  p_ = f_ * p_ * f_.transpose() + q_;
  p_ = (p_ + p_.transpose().eval()) / 2.0;
}

void KalmanBoxFilter::update(const BoundingBox& box) {
  const Eigen::Vector4d z = box_to_z(box);
  const Eigen::Vector4d y = z - h_ * x_;
  const Eigen::Matrix4d s = h_ * p_ * h_.transpose() + r_;
  const Eigen::Matrix<double, 7, 4> k =
      p_ * h_.transpose() * s.inverse();
  x_ += k * y;
  // Joseph form keeps the covariance positive semi-definite.
  const Eigen::Matrix<double, 7, 7> ikh =
      Eigen::Matrix<double, 7, 7>::Identity() - k * h_;
  p_ = ikh * p_ * ikh.transpose() + k * r_ * k.transpose();
  p_ = (p_ + p_.transpose().eval()) / 2.0;
}

BoundingBox KalmanBoxFilter::box() const {
  return z_to_box(x_(0), x_(1), x_(2), x_(3));
}

SortTracker::SortTracker(const TrackerConfig& config) : config_(config) {
  config_.validate();
}

StepResult SortTracker::step(const std::vector<Detection>& detections) {
  for (const auto& d : detections)
    if (!d.box.finite())
      throw NonFiniteDetection("detection box has NaN/inf coordinates");

  ++frame_count_;

  // Predict, pruning any track whose state went non-finite.
  std::vector<BoundingBox> predicted;
  predicted.reserve(tracks_.size());
  for (auto it = tracks_.begin(); it != tracks_.end();) {
    it->filter.predict();
    ++it->age;
    ++it->time_since_update;
    const BoundingBox box = it->filter.box();
    if (!box.finite()) {
      it = tracks_.erase(it);
      continue;
    }
    predicted.push_back(box);
    ++it;
  }

  // Associate detections to predictions on IoU.
  const int n_det = static_cast<int>(detections.size());
  const int n_trk = static_cast<int>(tracks_.size());
  std::vector<int> det_to_trk(n_det, -1);
  if (n_det > 0 && n_trk > 0) {
    Eigen::MatrixXd cost(n_det, n_trk);
    Eigen::MatrixXd iou(n_det, n_trk);
    for (int d = 0; d < n_det; ++d) {
      for (int t = 0; t < n_trk; ++t) {
        iou(d, t) = bbox_iou(detections[d].box, predicted[t]);
        cost(d, t) = -iou(d, t);
      }
    }
    const std::vector<int> match = solve_assignment(cost);
    for (int d = 0; d < n_det; ++d) {
      const int t = match[d];
      if (t >= 0 && iou(d, t) >= config_.iou_threshold) det_to_trk[d] = t;
    }
  }

  StepResult result;
  result.det_track_ids.assign(n_det, -1);

  for (int d = 0; d < n_det; ++d) {
    const int t = det_to_trk[d];
    if (t >= 0) {
      tracks_[t].filter.update(detections[d].box);
      tracks_[t].time_since_update = 0;
      ++tracks_[t].hits;
      result.det_track_ids[d] = tracks_[t].track_id;
    } else {
      tracks_.emplace_back(next_track_id_++, detections[d].box,
                           config_.noise);
      result.det_track_ids[d] = tracks_.back().track_id;
    }
  }

  for (const auto& track : tracks_) {
    if (track.time_since_update != 0) continue;
    if (track.hits >= config_.min_hits || frame_count_ <= config_.min_hits) {
      const BoundingBox box = track.filter.box();
      if (!(track.filter.state()(2) > 0.0))
        throw std::logic_error("emitted track has non-positive area");
      result.emitted.push_back({box, track.track_id});
    }
  }

  std::erase_if(tracks_, [this](const TrackState& t) {
    return t.time_since_update > config_.max_age;
  });

  return result;
}

void GlobalIdPropagator::bind_first_frame(const std::string& camera_id,
                                          const std::vector<int>& det_track_ids,
                                          const GlobalAssignment& assignment) {
  const auto it = assignment.global_id.find(camera_id);
  if (it == assignment.global_id.end())
    throw AssignmentMismatch("camera '" + camera_id +
                             "' is missing from the first-frame assignment");
  if (it->second.size() != det_track_ids.size())
    throw AssignmentMismatch(
        "camera '" + camera_id + "': matcher saw " +
        std::to_string(it->second.size()) + " frame-0 detections, tracker saw " +
        std::to_string(det_track_ids.size()));

  auto& bound = binding_[camera_id];
  for (size_t i = 0; i < det_track_ids.size(); ++i)
    bound[det_track_ids[i]] = it->second[i];
}

std::optional<int> GlobalIdPropagator::global_id(const std::string& camera_id,
                                                 int track_id) const {
  const auto cam = binding_.find(camera_id);
  if (cam == binding_.end()) return std::nullopt;
  const auto it = cam->second.find(track_id);
  if (it == cam->second.end()) return std::nullopt;
  return it->second;
}

}  // namespace mvpt
