#include "mvpt/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "mvpt/errors.hpp"
#include "mvpt/version.hpp"

namespace mvpt {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::filesystem::path& path, int line,
                       const std::string& what) {
  throw FormatError(path.string() + ":" + std::to_string(line) + ": " + what);
}

json parse_line(const std::filesystem::path& path, int line,
                const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(path, line, std::string("invalid JSON: ") + e.what());
  }
}

double require_number(const json& j, const std::filesystem::path& path,
                      int line, const char* what) {
  if (!j.is_number()) fail(path, line, std::string(what) + " must be a number");
  return j.get<double>();
}

constexpr std::size_t kNumKp = static_cast<std::size_t>(kNumKeypoints);

json keypoint_names_json() {
  json names = json::array();
  for (std::string_view n : kKeypointNames) names.push_back(std::string(n));
  return names;
}

void check_header(const json& header, const char* expected_type,
                  const std::filesystem::path& path) {
  if (!header.is_object() || !header.contains("format_version"))
    fail(path, 1, "missing header line with format_version");
  if (header["format_version"] != kFormatVersion)
    fail(path, 1, "unsupported format_version " + header["format_version"].dump());
  if (header.value("type", std::string()) != expected_type)
    fail(path, 1, std::string("expected type \"") + expected_type + "\"");
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return in;
}

}  // namespace

void write_detections(const std::filesystem::path& path,
                      const std::vector<FrameRecord>& frames,
                      const nlohmann::json& generator_info) {
  std::ofstream out = open_out(path);
  json header = {{"format_version", kFormatVersion},
                 {"type", "detections"},
                 {"keypoints", keypoint_names_json()}};
  if (!generator_info.is_null()) header["generator"] = generator_info;
  out << header.dump() << "\n";
  for (const FrameRecord& frame : frames) {
    json cameras = json::object();
    for (const auto& [camera_id, detections] : frame.cameras) {
      json list = json::array();
      for (const DetectionRecord& det : detections) {
        json kps = json::array();
        for (const Point2D& kp : det.keypoints.keypoints)
          kps.push_back({kp.u, kp.v, kp.confidence});
        json d = {{"keypoints", std::move(kps)}};
        if (det.bbox.valid())
          d["bbox"] = {det.bbox.x_min, det.bbox.y_min, det.bbox.x_max,
                       det.bbox.y_max};
        if (!det.mask_path.empty()) d["mask"] = det.mask_path;
        list.push_back(std::move(d));
      }
      cameras[camera_id] = std::move(list);
    }
    json line = {{"frame", frame.frame}, {"cameras", std::move(cameras)}};
    out << line.dump() << "\n";
  }
}

std::vector<FrameRecord> read_detections(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<FrameRecord> frames;
  std::string text;
  int line_no = 0;
  bool header_seen = false;
  int last_frame = -1;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    const json j = parse_line(path, line_no, text);
    if (!header_seen) {
      check_header(j, "detections", path);
      header_seen = true;
      continue;
    }
    if (!j.is_object() || !j.contains("frame") || !j["frame"].is_number_integer())
      fail(path, line_no, "expected {\"frame\": ..., \"cameras\": ...}");
    FrameRecord record;
    record.frame = j["frame"].get<int>();
    if (record.frame <= last_frame)
      fail(path, line_no,
           "frame indices must be strictly increasing (frame " +
               std::to_string(record.frame) + " after " +
               std::to_string(last_frame) + ")");
    last_frame = record.frame;
    const auto cams = j.find("cameras");
    if (cams == j.end() || !cams->is_object())
      fail(path, line_no, "\"cameras\" must be an object");
    for (const auto& [camera_id, dets] : cams->items()) {
      if (!dets.is_array()) fail(path, line_no, "camera entry must be an array");
      std::vector<DetectionRecord>& out = record.cameras[camera_id];
      for (const json& d : dets) {
        DetectionRecord det;
        const auto kps = d.find("keypoints");
        if (kps == d.end() || !kps->is_array() || kps->size() != kNumKp)
          fail(path, line_no,
               "each detection needs exactly " + std::to_string(kNumKeypoints) +
                   " keypoints");
        det.keypoints.keypoints.reserve(kNumKeypoints);
        for (const json& kp : *kps) {
          if (!kp.is_array() || kp.size() != 3)
            fail(path, line_no, "keypoints must be [u, v, confidence] triples");
          Point2D p;
          p.u = require_number(kp[0], path, line_no, "keypoint u");
          p.v = require_number(kp[1], path, line_no, "keypoint v");
          p.confidence = require_number(kp[2], path, line_no, "confidence");
          if (p.confidence < 0.0 || p.confidence > 1.0)
            fail(path, line_no, "confidence must be within [0, 1]");
          det.keypoints.keypoints.push_back(p);
        }
        if (const auto bbox = d.find("bbox"); bbox != d.end() && !bbox->is_null()) {
          if (!bbox->is_array() || bbox->size() != 4)
            fail(path, line_no, "bbox must be [x_min, y_min, x_max, y_max]");
          det.bbox.x_min = require_number((*bbox)[0], path, line_no, "bbox");
          det.bbox.y_min = require_number((*bbox)[1], path, line_no, "bbox");
          det.bbox.x_max = require_number((*bbox)[2], path, line_no, "bbox");
          det.bbox.y_max = require_number((*bbox)[3], path, line_no, "bbox");
        } else {
          det.bbox = BoundingBox{std::numeric_limits<double>::quiet_NaN(),
                                 std::numeric_limits<double>::quiet_NaN(),
                                 std::numeric_limits<double>::quiet_NaN(),
                                 std::numeric_limits<double>::quiet_NaN()};
        }
        if (const auto mask = d.find("mask"); mask != d.end() && !mask->is_null()) {
          if (!mask->is_string()) fail(path, line_no, "mask must be a string path");
          det.mask_path = mask->get<std::string>();
        }
        out.push_back(std::move(det));
      }
    }
    frames.push_back(std::move(record));
  }
  if (!header_seen) fail(path, 1, "empty detections file");
  return frames;
}

void write_trajectories(const std::filesystem::path& path,
                        const TrajectorySet& set) {
  std::ofstream out = open_out(path);
  for (const TrajectoryEntry& entry : set.entries) {
    json kps = json::array();
    json valid = json::array();
    json rmse = json::array();
    for (std::size_t k = 0; k < entry.pose.keypoints.size(); ++k) {
      const Point3D& p = entry.pose.keypoints[k];
      valid.push_back(p.valid);
      if (p.valid)
        kps.push_back({p.x, p.y, p.z});
      else
        kps.push_back(nullptr);
      const double r = k < entry.reprojection_rmse.size()
                           ? entry.reprojection_rmse[k]
                           : std::numeric_limits<double>::quiet_NaN();
      if (std::isfinite(r))
        rmse.push_back(r);
      else
        rmse.push_back(nullptr);
    }
    json line = {{"frame", entry.frame},
                 {"global_id", entry.global_id},
                 {"keypoints", std::move(kps)},
                 {"valid", std::move(valid)},
                 {"reprojection_rmse", std::move(rmse)}};
    out << line.dump() << "\n";
  }
  json meta = set.metadata.is_object() ? set.metadata : json::object();
  meta["type"] = "metadata";
  meta["format_version"] = kFormatVersion;
  meta["version"] = kVersion;
  meta["keypoints"] = keypoint_names_json();
  out << meta.dump() << "\n";
}

TrajectorySet read_trajectories(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  TrajectorySet set;
  std::string text;
  int line_no = 0;
  bool meta_seen = false;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    const json j = parse_line(path, line_no, text);
    if (!j.is_object()) fail(path, line_no, "expected a JSON object");
    if (meta_seen) fail(path, line_no, "content after the metadata line");
    if (j.value("type", std::string()) == "metadata") {
      if (j.value("format_version", -1) != kFormatVersion)
        fail(path, line_no, "unsupported format_version");
      set.metadata = j;
      meta_seen = true;
      continue;
    }
    if (!j.contains("frame") || !j["frame"].is_number_integer() ||
        !j.contains("global_id") || !j["global_id"].is_number_integer())
      fail(path, line_no, "expected integer \"frame\" and \"global_id\"");
    TrajectoryEntry entry;
    entry.frame = j["frame"].get<int>();
    entry.global_id = j["global_id"].get<int>();
    const auto kps = j.find("keypoints");
    const auto valid = j.find("valid");
    if (kps == j.end() || !kps->is_array() || kps->size() != kNumKp ||
        valid == j.end() || !valid->is_array() || valid->size() != kNumKp)
      fail(path, line_no,
           "\"keypoints\" and \"valid\" must hold " +
               std::to_string(kNumKeypoints) + " entries");
    entry.pose.keypoints.assign(kNumKeypoints, Point3D{});
    for (std::size_t k = 0; k < kNumKp; ++k) {
      const bool is_valid = (*valid)[k].is_boolean()
                                ? (*valid)[k].get<bool>()
                                : (fail(path, line_no, "\"valid\" must be booleans"), false);
      const json& kp = (*kps)[k];
      if (is_valid != (kp.is_array() && kp.size() == 3))
        fail(path, line_no, "validity flags must match null/[x,y,z] keypoints");
      if (is_valid) {
        entry.pose.keypoints[k] = Point3D::at(
            require_number(kp[0], path, line_no, "keypoint x"),
            require_number(kp[1], path, line_no, "keypoint y"),
            require_number(kp[2], path, line_no, "keypoint z"));
      }
    }
    entry.reprojection_rmse.assign(kNumKeypoints,
                                   std::numeric_limits<double>::quiet_NaN());
    if (const auto rmse = j.find("reprojection_rmse"); rmse != j.end()) {
      if (!rmse->is_array() || rmse->size() != kNumKp)
        fail(path, line_no, "\"reprojection_rmse\" must hold " +
                                std::to_string(kNumKeypoints) + " entries");
      for (std::size_t k = 0; k < kNumKp; ++k)
        if ((*rmse)[k].is_number())
          entry.reprojection_rmse[k] = (*rmse)[k].get<double>();
    }
    set.entries.push_back(std::move(entry));
  }
  if (!meta_seen)
    fail(path, std::max(1, line_no), "missing trailing metadata line");
  return set;
}

}  // namespace mvpt
