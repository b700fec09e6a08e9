#include "mvpt/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvpt/assignment.hpp"
#include "mvpt/disambiguation.hpp"
#include "mvpt/errors.hpp"
#include "mvpt/image_io.hpp"
#include "mvpt/silhouette.hpp"

namespace mvpt {

void PipelineConfig::validate() const {
  if (!(confidence_threshold >= 0.0) || !std::isfinite(confidence_threshold))
    throw InvalidConfig("confidence_threshold must be finite and >= 0");
  if (!(matching_gate > 0.0))
    throw InvalidConfig("matching_gate must be positive");
  tracker.validate();
}

Pipeline::Pipeline(std::vector<CameraCalibration> calibrations,
                   PipelineConfig config)
    : calibs_(std::move(calibrations)), config_(std::move(config)) {
  config_.validate();
  if (calibs_.size() < 2)
    throw CalibrationError("the pipeline needs >= 2 calibrated cameras, got " +
                           std::to_string(calibs_.size()));
  for (const CameraCalibration& calib : calibs_) {
    calib.validate();
    if (!trackers_.emplace(calib.camera_id, SortTracker(config_.tracker)).second)
      throw CalibrationError("duplicate camera_id '" + calib.camera_id + "'");
  }
}

std::vector<TrajectoryEntry> Pipeline::step(const FrameRecord& record) {
  for (const auto& [camera_id, detections] : record.cameras) {
    if (!trackers_.count(camera_id))
      throw CalibrationError("frame " + std::to_string(record.frame) +
                             " references uncalibrated camera '" + camera_id +
                             "'");
    for (std::size_t d = 0; d < detections.size(); ++d) {
      if (detections[d].keypoints.keypoints.size() !=
          static_cast<std::size_t>(kNumKeypoints))
        throw SchemaMismatch("frame " + std::to_string(record.frame) +
                             " camera '" + camera_id +
                             "': detection keypoint count != " +
                             std::to_string(kNumKeypoints));
      if (!detections[d].bbox.valid())
        throw MissingBBox("frame " + std::to_string(record.frame) +
                          " camera '" + camera_id + "' detection " +
                          std::to_string(d) + " has no usable bbox");
    }
  }

  const bool first_frame = !started_;
  if (first_frame) {
    std::vector<ViewDetections> views;
    for (const auto& [camera_id, detections] : record.cameras) {
      if (detections.empty()) continue;
      ViewDetections view;
      view.camera_id = camera_id;
      for (const DetectionRecord& det : detections)
        view.poses.push_back(det.keypoints);
      views.push_back(std::move(view));
    }
    if (views.size() < 2)
      throw InsufficientViews(
          "first frame needs detections in >= 2 views, got " +
          std::to_string(views.size()));
    MatchingConfig mc;
    mc.confidence_threshold = config_.confidence_threshold;
    mc.gating_threshold = config_.matching_gate;
    first_ = match_identities(views, calibs_, mc);
    started_ = true;
  }

  // Advance every camera's tracker (absent cameras see zero detections) and
  // resolve which global id each matched detection belongs to.
  struct LiveView {
    const CameraCalibration* calib;
    const Pose2D* pose;
  };
  std::map<int, std::vector<LiveView>> live;  // global id -> contributing views
  for (const CameraCalibration& calib : calibs_) {
    static const std::vector<DetectionRecord> kNoDetections;
    const auto found = record.cameras.find(calib.camera_id);
    const std::vector<DetectionRecord>& detections =
        found != record.cameras.end() ? found->second : kNoDetections;
    std::vector<Detection> boxes;
    boxes.reserve(detections.size());
    for (const DetectionRecord& det : detections)
      boxes.push_back(Detection{det.bbox, 1.0});
    const StepResult result = trackers_.at(calib.camera_id).step(boxes);
    if (first_frame && !detections.empty())
      propagator_.bind_first_frame(calib.camera_id, result.det_track_ids,
                                   first_);
    // Only confirmed (emitted) tracks contribute to triangulation; emitted
    // tracks were updated this frame, so each maps back to one detection.
    for (const TrackOutput& track : result.emitted) {
      const auto gid = propagator_.global_id(calib.camera_id, track.track_id);
      if (!gid) continue;
      const auto det_it =
          std::find(result.det_track_ids.begin(), result.det_track_ids.end(),
                    track.track_id);
      if (det_it == result.det_track_ids.end())
        throw std::logic_error("emitted track has no source detection");
      const std::size_t det_index = static_cast<std::size_t>(
          det_it - result.det_track_ids.begin());
      live[*gid].push_back(LiveView{&calib, &detections[det_index].keypoints});
    }
  }

  std::vector<TrajectoryEntry> out;
  for (const auto& [gid, views] : live) {
    if (views.size() < 2) continue;
    std::vector<PoseView> pose_views;
    pose_views.reserve(views.size());
    for (const LiveView& view : views)
      pose_views.push_back(PoseView{view.calib, *view.pose});
    if (config_.resolve_lr) {
      // resolve_lr's exhaustive search is bounded; more simultaneous views
      // than it supports is a config/input error, not a silent skip.
      const LRResolution resolution = resolve_lr(
          pose_views, default_symmetric_pairs(), config_.confidence_threshold);
      for (std::size_t v = 0; v < pose_views.size(); ++v)
        pose_views[v].pose = resolution.corrected[v];
    }
    const PoseTriangulation tri =
        triangulate_pose(pose_views, config_.confidence_threshold);
    const bool any_valid =
        std::any_of(tri.pose.keypoints.begin(), tri.pose.keypoints.end(),
                    [](const Point3D& p) { return p.valid; });
    if (!any_valid) continue;
    TrajectoryEntry entry;
    entry.frame = record.frame;
    entry.global_id = gid;
    entry.pose = tri.pose;
    entry.reprojection_rmse = tri.reprojection_rmse;
    out.push_back(std::move(entry));
  }
  return out;
}

PipelineResult run_pipeline(const std::vector<CameraCalibration>& calibrations,
                            const std::vector<FrameRecord>& frames,
                            const PipelineConfig& config) {
  Pipeline pipeline(calibrations, config);
  PipelineResult result;
  for (const FrameRecord& record : frames) {
    std::vector<TrajectoryEntry> entries = pipeline.step(record);
    result.trajectories.entries.insert(result.trajectories.entries.end(),
                                       entries.begin(), entries.end());
  }
  result.first_frame = pipeline.first_frame_assignment();

  nlohmann::json cameras = nlohmann::json::array();
  for (const CameraCalibration& calib : calibrations)
    cameras.push_back(calib.camera_id);
  result.trajectories.metadata = {
      {"cameras", std::move(cameras)},
      {"n_frames", frames.size()},
      {"n_global_ids", result.first_frame.num_global_ids},
      {"config",
       {{"confidence_threshold", config.confidence_threshold},
        {"matching_gate", config.matching_gate},
        {"iou_threshold", config.tracker.iou_threshold},
        {"max_age", config.tracker.max_age},
        {"min_hits", config.tracker.min_hits},
        {"resolve_lr", config.resolve_lr}}}};
  return result;
}

FrameRecord ingest_masks(const FrameRecord& record,
                         const std::filesystem::path& base_dir) {
  FrameRecord out = record;
  for (auto& [camera_id, detections] : out.cameras) {
    for (DetectionRecord& det : detections) {
      if (det.mask_path.empty()) continue;
      const BinaryMask mask = read_mask(base_dir / det.mask_path);
      det.bbox = mask_to_bbox(isolate_largest(mask));
    }
  }
  return out;
}

namespace {

// Mean 3D distance between two pose sequences over frames where both have a
// pose, averaged over mutually valid keypoints. NaN when nothing overlaps.
double trajectory_distance(const std::map<int, const Pose3D*>& a,
                           const std::map<int, const Pose3D*>& b) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& [frame, pose_a] : a) {
    const auto found = b.find(frame);
    if (found == b.end()) continue;
    const Pose3D& pa = *pose_a;
    const Pose3D& pb = *found->second;
    for (std::size_t k = 0; k < pa.keypoints.size() && k < pb.keypoints.size();
         ++k) {
      if (!pa.keypoints[k].valid || !pb.keypoints[k].valid) continue;
      sum += euclidean(pa.keypoints[k], pb.keypoints[k]);
      ++count;
    }
  }
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  return sum / static_cast<double>(count);
}

}  // namespace

EvalAlignment build_eval_pairs(const TrajectorySet& predicted,
                               const TrajectorySet& ground_truth) {
  // frame -> pose, per id on both sides
  std::map<int, std::map<int, const Pose3D*>> pred, gt;
  for (const TrajectoryEntry& e : predicted.entries)
    pred[e.global_id][e.frame] = &e.pose;
  for (const TrajectoryEntry& e : ground_truth.entries)
    gt[e.global_id][e.frame] = &e.pose;

  std::vector<int> pred_ids, gt_ids;
  for (const auto& [id, _] : pred) pred_ids.push_back(id);
  for (const auto& [id, _] : gt) gt_ids.push_back(id);

  EvalAlignment alignment;
  if (!pred_ids.empty() && !gt_ids.empty()) {
    Eigen::MatrixXd cost(pred_ids.size(), gt_ids.size());
    for (std::size_t i = 0; i < pred_ids.size(); ++i)
      for (std::size_t j = 0; j < gt_ids.size(); ++j) {
        const double d =
            trajectory_distance(pred[pred_ids[i]], gt[gt_ids[j]]);
        cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            std::isfinite(d) ? d : kForbiddenCost;
      }
    const std::vector<int> row_to_col = solve_assignment(cost);
    for (std::size_t i = 0; i < pred_ids.size(); ++i) {
      if (row_to_col[i] >= 0)
        alignment.predicted_to_gt[pred_ids[i]] = gt_ids[static_cast<std::size_t>(row_to_col[i])];
      else
        ++alignment.unmatched_predicted;
    }
  } else {
    alignment.unmatched_predicted = static_cast<int>(pred_ids.size());
  }

  std::map<int, int> gt_to_pred;
  for (const auto& [p, g] : alignment.predicted_to_gt) gt_to_pred[g] = p;

  Pose3D invalid_pose;
  invalid_pose.keypoints.assign(static_cast<std::size_t>(kNumKeypoints),
                                Point3D::invalid());
  for (const auto& [gt_id, frames] : gt) {
    const auto aligned = gt_to_pred.find(gt_id);
    for (const auto& [frame, gt_pose] : frames) {
      EvalPair3D pair;
      pair.ground_truth = *gt_pose;
      pair.predicted = invalid_pose;
      if (aligned != gt_to_pred.end()) {
        const auto& pred_frames = pred[aligned->second];
        const auto found = pred_frames.find(frame);
        if (found != pred_frames.end()) pair.predicted = *found->second;
      }
      alignment.pairs.push_back(std::move(pair));
    }
  }
  return alignment;
}

}  // namespace mvpt
