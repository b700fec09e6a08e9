// mvpt: multi-view pose triangulation and tracking.
//
// Subcommands:
//   synth        generate a synthetic scene (calibration, detections,
//                ground truth, optional silhouette masks)
//   match        first-frame cross-view identity matching
//   track        per-camera 2D box tracking
//   triangulate  index-aligned per-frame triangulation (no tracking)
//   run          full pipeline: match -> track -> [resolve L/R] -> triangulate
//   eval         compare predicted trajectories against ground truth
//
// Exit codes: 0 success, 1 input/config error, 2 internal invariant failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mvpt/errors.hpp"
#include "mvpt/image_io.hpp"
#include "mvpt/io.hpp"
#include "mvpt/matching.hpp"
#include "mvpt/metrics.hpp"
#include "mvpt/pipeline.hpp"
#include "mvpt/synthetic.hpp"
#include "mvpt/tracking.hpp"
#include "mvpt/version.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace mvpt;

constexpr const char* kRngName = "mt19937_64+polar-box-muller";

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << text;
}

// Emit to --out when given, stdout otherwise.
void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty())
    std::cout << text;
  else
    write_text(out_path, text);
}

struct SynthArgs {
  std::string out_dir;
  SceneConfig scene;
  int cameras = 4;
  int image_size = 1024;
  double rig_radius = 3.0;
  double rig_height = 1.5;
  bool masks = false;
  int speckles = 0;
};

int run_synth(const SynthArgs& args) {
  fs::create_directories(args.out_dir);
  const fs::path out_dir(args.out_dir);

  const auto rig = generate_rig(args.cameras, args.rig_radius, args.rig_height,
                                args.image_size);
  save_calibrations(out_dir / "calibration.json", rig);

  GroundTruth gt = generate_scene(args.scene);
  const auto rendered =
      render_detections(gt, rig, args.scene.noise_sigma, args.scene.dropout_prob,
                        args.scene.swap_prob, args.scene.seed + 1);

  std::vector<std::vector<std::vector<BinaryMask>>> masks;
  std::size_t mask_files = 0;
  if (args.masks) {
    MaskRenderOptions options;
    options.speckle_count = args.speckles;
    options.seed = args.scene.seed + 2;
    masks = render_masks(gt, rig, options);
    fs::create_directories(out_dir / "masks");
  }

  std::vector<FrameRecord> frames = to_frame_records(gt, rig, rendered);
  if (args.masks) {
    for (std::size_t f = 0; f < frames.size(); ++f) {
      for (std::size_t v = 0; v < rig.size(); ++v) {
        auto& dets = frames[f].cameras[rig[v].camera_id];
        for (std::size_t d = 0; d < dets.size(); ++d) {
          const int individual = rendered[f].identities[v][d];
          char name[64];
          std::snprintf(name, sizeof name, "frame%zu_%s_id%d.pgm", f,
                        rig[v].camera_id.c_str(), individual);
          const std::string rel = std::string("masks/") + name;
          write_mask_pgm(out_dir / rel,
                         masks[f][static_cast<std::size_t>(individual)][v]);
          dets[d].mask_path = rel;
          ++mask_files;
        }
      }
    }
  }

  const json config_echo = {{"n_individuals", args.scene.n_individuals},
                            {"n_frames", args.scene.n_frames},
                            {"arena_radius", args.scene.arena_radius},
                            {"seed", args.scene.seed},
                            {"noise_sigma", args.scene.noise_sigma},
                            {"dropout_prob", args.scene.dropout_prob},
                            {"swap_prob", args.scene.swap_prob},
                            {"min_separation", args.scene.min_separation},
                            {"cameras", args.cameras},
                            {"image_size", args.image_size},
                            {"rig_radius", args.rig_radius},
                            {"rig_height", args.rig_height}};
  const json generator = {{"tool", "mvpt synth"},
                          {"version", kVersion},
                          {"rng", kRngName},
                          {"config", config_echo}};
  write_detections(out_dir / "detections.jsonl", frames, generator);

  TrajectorySet truth;
  for (std::size_t f = 0; f < gt.frames.size(); ++f) {
    for (std::size_t i = 0; i < gt.frames[f].individuals.size(); ++i) {
      TrajectoryEntry entry;
      entry.frame = static_cast<int>(f);
      entry.global_id = static_cast<int>(i);
      entry.pose = gt.frames[f].individuals[i].pose;
      entry.reprojection_rmse.assign(static_cast<std::size_t>(kNumKeypoints),
                                     std::numeric_limits<double>::quiet_NaN());
      truth.entries.push_back(std::move(entry));
    }
  }
  truth.metadata = {{"source", "mvpt synth"}, {"rng", kRngName},
                    {"config", config_echo}};
  write_trajectories(out_dir / "groundtruth.jsonl", truth);

  std::cout << "wrote " << (out_dir / "calibration.json").string() << " ("
            << rig.size() << " cameras), detections.jsonl ("
            << frames.size() << " frames), groundtruth.jsonl ("
            << truth.entries.size() << " poses)";
  if (args.masks) std::cout << ", masks/ (" << mask_files << " files)";
  std::cout << "\n";
  return 0;
}

struct MatchArgs {
  std::string calib_path;
  std::string detections_path;
  std::string out_path;
  MatchingConfig config;
};

int run_match(const MatchArgs& args) {
  const auto calibs = load_calibrations(args.calib_path);
  const auto frames = read_detections(args.detections_path);
  if (frames.empty()) throw FormatError("no frames in " + args.detections_path);
  const FrameRecord& first = frames.front();

  std::vector<ViewDetections> views;
  for (const auto& [camera_id, detections] : first.cameras) {
    if (detections.empty()) continue;
    ViewDetections view;
    view.camera_id = camera_id;
    for (const DetectionRecord& det : detections)
      view.poses.push_back(det.keypoints);
    views.push_back(std::move(view));
  }
  const GlobalAssignment assignment = match_identities(views, calibs, args.config);

  json per_camera = json::object();
  for (const auto& [camera_id, ids] : assignment.global_id)
    per_camera[camera_id] = ids;
  const json out = {{"format_version", kFormatVersion},
                    {"type", "assignment"},
                    {"frame", first.frame},
                    {"num_global_ids", assignment.num_global_ids},
                    {"total_cost", assignment.total_cost},
                    {"assignment", per_camera}};
  emit(args.out_path, out.dump(2) + "\n");
  return 0;
}

struct TrackArgs {
  std::string detections_path;
  std::string out_path;
  TrackerConfig config;
};

int run_track(const TrackArgs& args) {
  const auto frames = read_detections(args.detections_path);
  std::map<std::string, SortTracker> trackers;
  std::string out;
  out += json{{"format_version", kFormatVersion}, {"type", "tracks"}}.dump();
  out += "\n";
  for (const FrameRecord& frame : frames) {
    json cameras = json::object();
    for (const auto& [camera_id, detections] : frame.cameras) {
      std::vector<Detection> boxes;
      boxes.reserve(detections.size());
      for (std::size_t d = 0; d < detections.size(); ++d) {
        if (!detections[d].bbox.valid())
          throw MissingBBox("frame " + std::to_string(frame.frame) +
                            " camera '" + camera_id + "' detection " +
                            std::to_string(d) + " has no usable bbox");
        boxes.push_back(Detection{detections[d].bbox, 1.0});
      }
      auto [it, _] = trackers.try_emplace(camera_id, args.config);
      const StepResult result = it->second.step(boxes);
      json tracks = json::array();
      for (const TrackOutput& t : result.emitted)
        tracks.push_back({{"track_id", t.track_id},
                          {"bbox", {t.box.x_min, t.box.y_min, t.box.x_max,
                                    t.box.y_max}}});
      cameras[camera_id] = std::move(tracks);
    }
    out += json{{"frame", frame.frame}, {"cameras", std::move(cameras)}}.dump();
    out += "\n";
  }
  emit(args.out_path, out);
  return 0;
}

struct TriangulateArgs {
  std::string calib_path;
  std::string detections_path;
  std::string out_path;
  double confidence_threshold = kDefaultConfidenceThreshold;
};

// Detections are taken as index-aligned across cameras: detection i in every
// view is treated as the same individual. Useful when an upstream stage has
// already sorted detections consistently.
int run_triangulate(const TriangulateArgs& args) {
  const auto calibs = load_calibrations(args.calib_path);
  std::map<std::string, const CameraCalibration*> by_id;
  for (const CameraCalibration& calib : calibs) by_id[calib.camera_id] = &calib;

  const auto frames = read_detections(args.detections_path);
  TrajectorySet set;
  for (const FrameRecord& frame : frames) {
    std::size_t max_dets = 0;
    for (const auto& [camera_id, detections] : frame.cameras) {
      if (!by_id.count(camera_id))
        throw CalibrationError("frame " + std::to_string(frame.frame) +
                               " references uncalibrated camera '" +
                               camera_id + "'");
      max_dets = std::max(max_dets, detections.size());
    }
    for (std::size_t i = 0; i < max_dets; ++i) {
      std::vector<PoseView> views;
      for (const auto& [camera_id, detections] : frame.cameras)
        if (i < detections.size())
          views.push_back(PoseView{by_id.at(camera_id), detections[i].keypoints});
      if (views.size() < 2) continue;
      const PoseTriangulation tri =
          triangulate_pose(views, args.confidence_threshold);
      bool any_valid = false;
      for (const Point3D& p : tri.pose.keypoints) any_valid |= p.valid;
      if (!any_valid) continue;
      TrajectoryEntry entry;
      entry.frame = frame.frame;
      entry.global_id = static_cast<int>(i);
      entry.pose = tri.pose;
      entry.reprojection_rmse = tri.reprojection_rmse;
      set.entries.push_back(std::move(entry));
    }
  }
  set.metadata = {{"mode", "index-aligned"},
                  {"confidence_threshold", args.confidence_threshold}};
  if (args.out_path.empty()) throw InvalidConfig("--out is required");
  write_trajectories(args.out_path, set);
  std::cout << "wrote " << args.out_path << " (" << set.entries.size()
            << " poses)\n";
  return 0;
}

struct RunArgs {
  std::string calib_path;
  std::string detections_path;
  std::string out_path;
  PipelineConfig config;
};

int run_run(const RunArgs& args) {
  const auto calibs = load_calibrations(args.calib_path);
  auto frames = read_detections(args.detections_path);
  const fs::path base_dir = fs::path(args.detections_path).parent_path();
  for (FrameRecord& frame : frames) frame = ingest_masks(frame, base_dir);

  PipelineResult result = run_pipeline(calibs, frames, args.config);
  write_trajectories(args.out_path, result.trajectories);
  std::cout << "wrote " << args.out_path << " ("
            << result.trajectories.entries.size() << " poses, "
            << result.first_frame.num_global_ids << " identities)\n";
  return 0;
}

struct EvalArgs {
  std::string pred_path;
  std::string gt_path;
  std::string out_path;
};

json values_to_json(const MetricValues& v) {
  return {{"rmse", v.rmse},          {"median", v.median},
          {"pck05", v.pck05},        {"pck10", v.pck10},
          {"n_evaluated", v.n_evaluated}, {"n_missing", v.n_missing}};
}

int run_eval(const EvalArgs& args) {
  const TrajectorySet predicted = read_trajectories(args.pred_path);
  const TrajectorySet truth = read_trajectories(args.gt_path);
  const EvalAlignment alignment = build_eval_pairs(predicted, truth);
  if (alignment.pairs.empty())
    throw NoValidKeypoints("ground truth contains no poses to evaluate");
  const MetricsReport report = per_keypoint_report(alignment.pairs);

  std::cout << format_report_table(report);

  json mapping = json::object();
  for (const auto& [pred_id, gt_id] : alignment.predicted_to_gt)
    mapping[std::to_string(pred_id)] = gt_id;
  json per_keypoint = json::object();
  for (int k = 0; k < kNumKeypoints; ++k)
    per_keypoint[std::string(kKeypointNames[static_cast<std::size_t>(k)])] =
        values_to_json(report.per_keypoint[static_cast<std::size_t>(k)]);
  const json out = {{"format_version", kFormatVersion},
                    {"type", "metrics"},
                    {"unit", report.unit},
                    {"overall", values_to_json(report.overall)},
                    {"per_keypoint", per_keypoint},
                    {"alignment",
                     {{"predicted_to_gt", mapping},
                      {"unmatched_predicted", alignment.unmatched_predicted}}}};
  if (args.out_path.empty())
    std::cout << out.dump(2) << "\n";
  else
    write_text(args.out_path, out.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-view animal pose triangulation and tracking"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "generate a synthetic multi-camera scene");
  synth_cmd->add_option("--out", synth.out_dir, "output directory")->required();
  synth_cmd->add_option("--individuals", synth.scene.n_individuals,
                        "number of individuals (1-10)");
  synth_cmd->add_option("--frames", synth.scene.n_frames, "number of frames");
  synth_cmd->add_option("--cameras", synth.cameras, "cameras on the rig");
  synth_cmd->add_option("--image-size", synth.image_size, "image side, px");
  synth_cmd->add_option("--arena-radius", synth.scene.arena_radius,
                        "arena radius, m");
  synth_cmd->add_option("--rig-radius", synth.rig_radius, "camera circle radius, m");
  synth_cmd->add_option("--rig-height", synth.rig_height, "camera height, m");
  synth_cmd->add_option("--seed", synth.scene.seed, "RNG seed");
  synth_cmd->add_option("--noise-sigma", synth.scene.noise_sigma,
                        "keypoint noise std, px");
  synth_cmd->add_option("--dropout", synth.scene.dropout_prob,
                        "per-keypoint dropout probability");
  synth_cmd->add_option("--swap-prob", synth.scene.swap_prob,
                        "per-view symmetric-pair swap probability");
  synth_cmd->add_option("--min-separation", synth.scene.min_separation,
                        "minimum inter-individual distance, m");
  synth_cmd->add_flag("--masks", synth.masks, "render silhouette masks");
  synth_cmd->add_option("--speckles", synth.speckles,
                        "speckle components per mask (needs --masks)");

  MatchArgs match;
  CLI::App* match_cmd =
      app.add_subcommand("match", "first-frame cross-view identity matching");
  match_cmd->add_option("--calib", match.calib_path, "calibration JSON")->required();
  match_cmd->add_option("--detections", match.detections_path, "detections JSONL")
      ->required();
  match_cmd->add_option("--out", match.out_path, "assignment JSON (default stdout)");
  match_cmd->add_option("--confidence-threshold", match.config.confidence_threshold,
                        "keypoint confidence cutoff");
  match_cmd->add_option("--gate", match.config.gating_threshold,
                        "max mean reprojection error to join an identity, px");

  TrackArgs track;
  CLI::App* track_cmd = app.add_subcommand("track", "per-camera 2D box tracking");
  track_cmd->add_option("--detections", track.detections_path, "detections JSONL")
      ->required();
  track_cmd->add_option("--out", track.out_path, "tracks JSONL (default stdout)");
  track_cmd->add_option("--iou-threshold", track.config.iou_threshold,
                        "min IoU to associate");
  track_cmd->add_option("--max-age", track.config.max_age,
                        "frames a track may coast");
  track_cmd->add_option("--min-hits", track.config.min_hits,
                        "hits before a track is emitted");

  TriangulateArgs tri;
  CLI::App* tri_cmd = app.add_subcommand(
      "triangulate", "triangulate index-aligned detections, no tracking");
  tri_cmd->add_option("--calib", tri.calib_path, "calibration JSON")->required();
  tri_cmd->add_option("--detections", tri.detections_path, "detections JSONL")
      ->required();
  tri_cmd->add_option("--out", tri.out_path, "trajectories JSONL")->required();
  tri_cmd->add_option("--confidence-threshold", tri.confidence_threshold,
                      "keypoint confidence cutoff");

  RunArgs run;
  CLI::App* run_cmd = app.add_subcommand("run", "full pipeline");
  run_cmd->add_option("--calib", run.calib_path, "calibration JSON")->required();
  run_cmd->add_option("--detections", run.detections_path, "detections JSONL")
      ->required();
  run_cmd->add_option("--out", run.out_path, "trajectories JSONL")->required();
  run_cmd->add_flag("--resolve-lr", run.config.resolve_lr,
                    "resolve left/right swaps by triangulation error");
  run_cmd->add_option("--confidence-threshold", run.config.confidence_threshold,
                      "keypoint confidence cutoff");
  run_cmd->add_option("--iou-threshold", run.config.tracker.iou_threshold,
                      "min IoU to associate");
  run_cmd->add_option("--max-age", run.config.tracker.max_age,
                      "frames a track may coast");
  run_cmd->add_option("--min-hits", run.config.tracker.min_hits,
                      "hits before a track is emitted");
  run_cmd->add_option("--gate", run.config.matching_gate,
                      "first-frame matching gate, px");

  EvalArgs eval;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "evaluate trajectories against ground truth");
  eval_cmd->add_option("--pred", eval.pred_path, "predicted trajectories JSONL")
      ->required();
  eval_cmd->add_option("--gt", eval.gt_path, "ground-truth trajectories JSONL")
      ->required();
  eval_cmd->add_option("--out", eval.out_path, "metrics JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (match_cmd->parsed()) return run_match(match);
    if (track_cmd->parsed()) return run_track(track);
    if (tri_cmd->parsed()) return run_triangulate(tri);
    if (run_cmd->parsed()) return run_run(run);
    if (eval_cmd->parsed()) return run_eval(eval);
    std::cerr << "error: no subcommand\n";
    return 1;
  } catch (const std::logic_error& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
