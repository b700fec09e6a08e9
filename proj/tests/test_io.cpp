#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mvpt/errors.hpp"
#include "mvpt/io.hpp"
#include "mvpt/rng.hpp"

using namespace mvpt;
namespace fs = std::filesystem;

namespace {

fs::path tmp_file(const std::string& name) {
  return fs::temp_directory_path() / name;
}

Pose2D random_pose2d(Rng& rng) {
  Pose2D pose;
  for (int k = 0; k < kNumKeypoints; ++k)
    pose.keypoints.push_back({rng.uniform(0.0, 1024.0),
                              rng.uniform(0.0, 1024.0),
                              rng.bernoulli(0.8) ? rng.uniform(0.5, 1.0) : 0.0});
  return pose;
}

std::vector<FrameRecord> sample_frames() {
  Rng rng(12);
  std::vector<FrameRecord> frames;
  for (const int f : {0, 1, 5}) {  // gaps are fine; order must increase
    FrameRecord record;
    record.frame = f;
    for (const std::string cam : {"cam0", "cam1"}) {
      for (int d = 0; d < 2; ++d) {
        DetectionRecord det;
        det.keypoints = random_pose2d(rng);
        if (d == 0) {
          det.bbox = {10, 20, 200, 260};
          det.mask_path = "masks/" + cam + ".pgm";
        }  // second detection: no bbox, no mask
        record.cameras[cam].push_back(det);
      }
    }
    frames.push_back(record);
  }
  return frames;
}

// Expects a FormatError whose message carries "<file>:<line>:".
template <class Fn>
void expect_format_error_at(const fs::path& path, int line, Fn&& fn) {
  try {
    fn();
    FAIL("expected FormatError for " << path.string());
  } catch (const FormatError& e) {
    const std::string needle =
        path.filename().string() + ":" + std::to_string(line) + ":";
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

fs::path write_text(const std::string& name, const std::string& body) {
  const fs::path p = tmp_file(name);
  std::ofstream(p, std::ios::binary) << body;
  return p;
}

const std::string kDetHeader =
    R"({"format_version":1,"type":"detections","keypoints":["beak","nose","eye_left","eye_right","shoulder_left","shoulder_right","keel_top","keel_bottom","tail"]})";

std::string det_line(int frame, int n_keypoints = 9,
                     double confidence = 1.0) {
  std::string kps;
  for (int k = 0; k < n_keypoints; ++k) {
    if (k) kps += ",";
    kps += "[1.0,2.0," + std::to_string(confidence) + "]";
  }
  return R"({"frame":)" + std::to_string(frame) +
         R"(,"cameras":{"cam0":[{"keypoints":[)" + kps + "]}]}}";
}

}  // namespace

TEST_CASE("detections round trip") {
  const fs::path p = tmp_file("mvpt_det_roundtrip.jsonl");
  const auto frames = sample_frames();
  write_detections(p, frames);
  const auto loaded = read_detections(p);

  REQUIRE(loaded.size() == frames.size());
  for (size_t f = 0; f < frames.size(); ++f) {
    CHECK(loaded[f].frame == frames[f].frame);
    REQUIRE(loaded[f].cameras.size() == frames[f].cameras.size());
    for (const auto& [cam, dets] : frames[f].cameras) {
      REQUIRE(loaded[f].cameras.count(cam) == 1);
      const auto& got = loaded[f].cameras.at(cam);
      REQUIRE(got.size() == dets.size());
      for (size_t d = 0; d < dets.size(); ++d) {
        CHECK(got[d].mask_path == dets[d].mask_path);
        if (dets[d].bbox.valid()) {
          CHECK(got[d].bbox.x_min == dets[d].bbox.x_min);
          CHECK(got[d].bbox.y_max == dets[d].bbox.y_max);
        } else {
          // Boxes the writer omitted come back as NaN sentinels.
          CHECK(std::isnan(got[d].bbox.x_min));
          CHECK_FALSE(got[d].bbox.valid());
        }
        for (int k = 0; k < kNumKeypoints; ++k) {
          const auto ks = static_cast<size_t>(k);
          CHECK(got[d].keypoints.keypoints[ks].u ==
                dets[d].keypoints.keypoints[ks].u);
          CHECK(got[d].keypoints.keypoints[ks].v ==
                dets[d].keypoints.keypoints[ks].v);
          CHECK(got[d].keypoints.keypoints[ks].confidence ==
                dets[d].keypoints.keypoints[ks].confidence);
        }
      }
    }
  }
  fs::remove(p);
}

TEST_CASE("detections header carries schema and optional generator info") {
  const fs::path p = tmp_file("mvpt_det_header.jsonl");
  nlohmann::json generator = {{"tool", "unit-test"}, {"seed", 7}};
  write_detections(p, sample_frames(), generator);

  std::ifstream in(p);
  std::string first;
  REQUIRE(std::getline(in, first));
  const auto header = nlohmann::json::parse(first);
  CHECK(header["format_version"] == 1);
  CHECK(header["type"] == "detections");
  REQUIRE(header["keypoints"].is_array());
  CHECK(header["keypoints"].size() == 9);
  CHECK(header["keypoints"][0] == "beak");
  CHECK(header["generator"]["tool"] == "unit-test");
  CHECK(header["generator"]["seed"] == 7);
  fs::remove(p);

  // Without generator info the block is absent.
  const fs::path q = tmp_file("mvpt_det_nogen.jsonl");
  write_detections(q, {});
  std::ifstream in2(q);
  REQUIRE(std::getline(in2, first));
  CHECK_FALSE(nlohmann::json::parse(first).contains("generator"));
  CHECK(read_detections(q).empty());
  fs::remove(q);
}

TEST_CASE("malformed detections are rejected with file:line context") {
  SUBCASE("missing header") {
    const auto p = write_text("mvpt_det_nohdr.jsonl", det_line(0) + "\n");
    expect_format_error_at(p, 1, [&] { read_detections(p); });
    fs::remove(p);
  }
  SUBCASE("wrong type") {
    const auto p = write_text(
        "mvpt_det_wrongtype.jsonl",
        R"({"format_version":1,"type":"trajectories"})" "\n" + det_line(0) + "\n");
    expect_format_error_at(p, 1, [&] { read_detections(p); });
    fs::remove(p);
  }
  SUBCASE("unsupported format_version") {
    const auto p = write_text("mvpt_det_badver.jsonl",
                              R"({"format_version":99,"type":"detections"})" "\n");
    expect_format_error_at(p, 1, [&] { read_detections(p); });
    fs::remove(p);
  }
  SUBCASE("broken JSON on a frame line") {
    const auto p = write_text("mvpt_det_badjson.jsonl",
                              kDetHeader + "\n" + det_line(0) + "\nnot json\n");
    expect_format_error_at(p, 3, [&] { read_detections(p); });
    fs::remove(p);
  }
  SUBCASE("wrong keypoint count") {
    const auto p = write_text("mvpt_det_8kp.jsonl",
                              kDetHeader + "\n" + det_line(0, 8) + "\n");
    expect_format_error_at(p, 2, [&] { read_detections(p); });
    fs::remove(p);
  }
  SUBCASE("confidence out of range") {
    const auto p = write_text("mvpt_det_conf.jsonl",
                              kDetHeader + "\n" + det_line(0, 9, 1.5) + "\n");
    expect_format_error_at(p, 2, [&] { read_detections(p); });
    fs::remove(p);
  }
  SUBCASE("non-increasing frame indices") {
    const auto p = write_text(
        "mvpt_det_order.jsonl",
        kDetHeader + "\n" + det_line(3) + "\n" + det_line(3) + "\n");
    expect_format_error_at(p, 3, [&] { read_detections(p); });
    fs::remove(p);
    const auto q = write_text(
        "mvpt_det_desc.jsonl",
        kDetHeader + "\n" + det_line(3) + "\n" + det_line(1) + "\n");
    expect_format_error_at(q, 3, [&] { read_detections(q); });
    fs::remove(q);
  }
  SUBCASE("bad bbox arity") {
    const std::string line =
        R"({"frame":0,"cameras":{"cam0":[{"bbox":[1,2,3],"keypoints":[)" +
        [&] {
          std::string kps;
          for (int k = 0; k < 9; ++k) {
            if (k) kps += ",";
            kps += "[1,2,1.0]";
          }
          return kps;
        }() +
        "]}]}}";
    const auto p =
        write_text("mvpt_det_bbox.jsonl", kDetHeader + "\n" + line + "\n");
    expect_format_error_at(p, 2, [&] { read_detections(p); });
    fs::remove(p);
  }
  SUBCASE("empty file") {
    const auto p = write_text("mvpt_det_empty.jsonl", "");
    expect_format_error_at(p, 1, [&] { read_detections(p); });
    fs::remove(p);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_detections(tmp_file("mvpt_det_missing.jsonl")),
                    FormatError);
  }
}

TEST_CASE("trajectories round trip, including invalid keypoints and NaN rmse") {
  const fs::path p = tmp_file("mvpt_traj_roundtrip.jsonl");
  TrajectorySet set;
  Rng rng(5);
  for (int f = 0; f < 3; ++f) {
    for (int g = 0; g < 2; ++g) {
      TrajectoryEntry e;
      e.frame = f;
      e.global_id = g;
      for (int k = 0; k < kNumKeypoints; ++k) {
        if (rng.bernoulli(0.75)) {
          e.pose.keypoints.push_back(Point3D::at(
              rng.normal(), rng.normal(), rng.uniform(0.0, 2.0)));
          e.reprojection_rmse.push_back(rng.uniform(0.0, 3.0));
        } else {
          e.pose.keypoints.push_back(Point3D::invalid());
          e.reprojection_rmse.push_back(
              std::numeric_limits<double>::quiet_NaN());
        }
      }
      set.entries.push_back(std::move(e));
    }
  }
  set.metadata = {{"cameras", {"cam0", "cam1"}}, {"n_frames", 3}};
  write_trajectories(p, set);

  const TrajectorySet loaded = read_trajectories(p);
  REQUIRE(loaded.entries.size() == set.entries.size());
  for (size_t i = 0; i < set.entries.size(); ++i) {
    const auto& want = set.entries[i];
    const auto& got = loaded.entries[i];
    CHECK(got.frame == want.frame);
    CHECK(got.global_id == want.global_id);
    REQUIRE(got.pose.keypoints.size() == static_cast<size_t>(kNumKeypoints));
    REQUIRE(got.reprojection_rmse.size() ==
            static_cast<size_t>(kNumKeypoints));
    for (int k = 0; k < kNumKeypoints; ++k) {
      const auto ks = static_cast<size_t>(k);
      CHECK(got.pose.keypoints[ks].valid == want.pose.keypoints[ks].valid);
      if (want.pose.keypoints[ks].valid) {
        CHECK(got.pose.keypoints[ks].x == want.pose.keypoints[ks].x);
        CHECK(got.pose.keypoints[ks].y == want.pose.keypoints[ks].y);
        CHECK(got.pose.keypoints[ks].z == want.pose.keypoints[ks].z);
        CHECK(got.reprojection_rmse[ks] == want.reprojection_rmse[ks]);
      } else {
        CHECK(std::isnan(got.pose.keypoints[ks].x));
        CHECK(std::isnan(got.reprojection_rmse[ks]));
      }
    }
  }
  // Metadata echoes custom fields and the stamped schema block.
  CHECK(loaded.metadata["type"] == "metadata");
  CHECK(loaded.metadata["format_version"] == 1);
  CHECK(loaded.metadata["n_frames"] == 3);
  CHECK(loaded.metadata["cameras"][0] == "cam0");
  CHECK(loaded.metadata.contains("version"));
  CHECK(loaded.metadata["keypoints"].size() == 9);
  fs::remove(p);
}

TEST_CASE("an empty trajectory set still writes and reads its metadata") {
  const fs::path p = tmp_file("mvpt_traj_empty.jsonl");
  TrajectorySet set;
  set.metadata = {{"note", "nothing tracked"}};
  write_trajectories(p, set);
  const TrajectorySet loaded = read_trajectories(p);
  CHECK(loaded.entries.empty());
  CHECK(loaded.metadata["note"] == "nothing tracked");
  fs::remove(p);
}

TEST_CASE("malformed trajectories are rejected with file:line context") {
  const std::string entry =
      R"({"frame":0,"global_id":0,"keypoints":[[1,2,3],null,null,null,null,null,null,null,null],"valid":[true,false,false,false,false,false,false,false,false],"reprojection_rmse":[0.5,null,null,null,null,null,null,null,null]})";
  const std::string meta = R"({"type":"metadata","format_version":1})";

  SUBCASE("content after the metadata line") {
    const auto p = write_text("mvpt_traj_tail.jsonl",
                              entry + "\n" + meta + "\n" + entry + "\n");
    expect_format_error_at(p, 3, [&] { read_trajectories(p); });
    fs::remove(p);
  }
  SUBCASE("missing metadata line") {
    const auto p = write_text("mvpt_traj_nometa.jsonl", entry + "\n");
    CHECK_THROWS_AS(read_trajectories(p), FormatError);
    fs::remove(p);
  }
  SUBCASE("validity flag disagrees with a null keypoint") {
    const std::string bad =
        R"({"frame":0,"global_id":0,"keypoints":[null,null,null,null,null,null,null,null,null],"valid":[true,false,false,false,false,false,false,false,false]})";
    const auto p = write_text("mvpt_traj_validity.jsonl", bad + "\n" + meta + "\n");
    expect_format_error_at(p, 1, [&] { read_trajectories(p); });
    fs::remove(p);
  }
  SUBCASE("wrong keypoint arity") {
    const std::string bad =
        R"({"frame":0,"global_id":0,"keypoints":[[1,2,3]],"valid":[true]})";
    const auto p = write_text("mvpt_traj_arity.jsonl", bad + "\n" + meta + "\n");
    expect_format_error_at(p, 1, [&] { read_trajectories(p); });
    fs::remove(p);
  }
  SUBCASE("unsupported metadata format_version") {
    const auto p = write_text(
        "mvpt_traj_ver.jsonl",
        entry + "\n" + R"({"type":"metadata","format_version":2})" + "\n");
    expect_format_error_at(p, 2, [&] { read_trajectories(p); });
    fs::remove(p);
  }
  SUBCASE("missing frame or global_id") {
    const auto p = write_text(
        "mvpt_traj_nofield.jsonl",
        R"({"frame":0,"keypoints":[],"valid":[]})" "\n" + meta + "\n");
    expect_format_error_at(p, 1, [&] { read_trajectories(p); });
    fs::remove(p);
  }
}

TEST_CASE("trajectory writes are byte-identical across calls") {
  TrajectorySet set;
  TrajectoryEntry e;
  e.frame = 0;
  e.global_id = 0;
  for (int k = 0; k < kNumKeypoints; ++k) {
    e.pose.keypoints.push_back(Point3D::at(0.1 * k, -0.2 * k, 0.3));
    e.reprojection_rmse.push_back(0.25 * k);
  }
  set.entries.push_back(e);
  set.metadata = {{"n_frames", 1}};

  const fs::path a = tmp_file("mvpt_traj_stable_a.jsonl");
  const fs::path b = tmp_file("mvpt_traj_stable_b.jsonl");
  write_trajectories(a, set);
  write_trajectories(b, set);
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  const std::string ca((std::istreambuf_iterator<char>(fa)),
                       std::istreambuf_iterator<char>());
  const std::string cb((std::istreambuf_iterator<char>(fb)),
                       std::istreambuf_iterator<char>());
  CHECK(ca == cb);
  CHECK(!ca.empty());
  fs::remove(a);
  fs::remove(b);
}
