#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "mvpt/types.hpp"

namespace mvpt {

// One detected individual in one camera view.
struct DetectionRecord {
  BoundingBox bbox;    // may be invalid when the source provides none
  Pose2D keypoints;    // exactly 9 entries
  std::string mask_path;  // relative to the detections file; empty = none
};

// All detections of one frame across cameras. Cameras absent from the map
// contributed zero detections.
struct FrameRecord {
  int frame = 0;
  std::map<std::string, std::vector<DetectionRecord>> cameras;
};

// Detections are JSON Lines. First line is a header:
//   {"format_version":1,"type":"detections","keypoints":[names...],
//    "generator":{...}}            (generator block optional)
// then one line per frame, strictly increasing frame indices:
//   {"frame":F,"cameras":{"cam0":[{"bbox":[x0,y0,x1,y1],
//    "keypoints":[[u,v,c] x9],"mask":"path-or-null"}, ...], ...}}
void write_detections(const std::filesystem::path& path,
                      const std::vector<FrameRecord>& frames,
                      const nlohmann::json& generator_info = nullptr);

// Throws FormatError naming the offending line on any malformed input.
std::vector<FrameRecord> read_detections(const std::filesystem::path& path);

struct TrajectoryEntry {
  int frame = 0;
  int global_id = 0;
  Pose3D pose;
  // Per keypoint: reprojection RMSE in px, NaN where unavailable.
  std::vector<double> reprojection_rmse;
};

struct TrajectorySet {
  std::vector<TrajectoryEntry> entries;  // file order; frame-major from the pipeline
  nlohmann::json metadata;               // config echo, version, camera ids
};

// Trajectories are JSON Lines: one object per (frame, global_id) with 3D
// keypoints (null where invalid), validity flags, and per-keypoint
// reprojection RMSE, followed by one trailing metadata object:
//   {"frame":F,"global_id":G,"keypoints":[[x,y,z]|null x9],
//    "valid":[bool x9],"reprojection_rmse":[num|null x9]}
//   {"type":"metadata","format_version":1,"version":"...", ...}
void write_trajectories(const std::filesystem::path& path,
                        const TrajectorySet& set);
TrajectorySet read_trajectories(const std::filesystem::path& path);

}  // namespace mvpt
