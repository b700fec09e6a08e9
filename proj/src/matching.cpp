#include "mvpt/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mvpt/assignment.hpp"
#include "mvpt/errors.hpp"

namespace mvpt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ClusterMember {
  const CameraCalibration* calib;
  const Pose2D* pose;
};

// Mean per-keypoint reprojection RMSE of triangulating the cluster jointly
// with the candidate. Only keypoints the candidate contributes to (and that
// at least one cluster member also sees) enter the mean; without any such
// keypoint the pairing is impossible and costs infinity.
double cluster_cost(const std::vector<ClusterMember>& cluster,
                    const CameraCalibration& cand_calib, const Pose2D& cand,
                    double conf_thr) {
  const size_t n_kp = cand.keypoints.size();
  double sum = 0.0;
  int used = 0;
  std::vector<Observation> obs;
  for (size_t k = 0; k < n_kp; ++k) {
    if (!cand.keypoints[k].usable(conf_thr)) continue;
    obs.clear();
    for (const auto& m : cluster) {
      if (k >= m.pose->keypoints.size()) continue;
      const Point2D& p = m.pose->keypoints[k];
      if (p.usable(conf_thr)) obs.push_back({m.calib, p});
    }
    if (obs.empty()) continue;
    obs.push_back({&cand_calib, cand.keypoints[k]});
    try {
      sum += triangulate_point(obs, conf_thr).reprojection_rmse;
      ++used;
    } catch (const DegenerateGeometry&) {
      // keypoint carries no signal for this pairing
    }
  }
  if (used == 0) return kInf;
  return sum / used;
}

}  // namespace

GlobalAssignment match_identities(const std::vector<ViewDetections>& views,
                                  const std::vector<CameraCalibration>& calibs,
                                  const MatchingConfig& config) {
  if (views.size() < 2)
    throw SingleView("identity matching needs >= 2 views, got " +
                     std::to_string(views.size()));

  std::map<std::string, const CameraCalibration*> calib_of;
  for (const auto& c : calibs) calib_of[c.camera_id] = &c;
  for (const auto& v : views)
    if (!calib_of.count(v.camera_id))
      throw NoCalibration("no calibration for camera '" + v.camera_id + "'");

  // Reference view first, remaining views by descending detection count;
  // lexicographic camera_id breaks ties so the order is deterministic.
  std::vector<size_t> order(views.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (views[a].poses.size() != views[b].poses.size())
      return views[a].poses.size() > views[b].poses.size();
    return views[a].camera_id < views[b].camera_id;
  });

  GlobalAssignment out;
  for (const auto& v : views)
    out.global_id[v.camera_id] =
        std::vector<int>(v.poses.size(), -1);

  // Identity clusters, indexed by global id.
  std::vector<std::vector<ClusterMember>> clusters;

  const ViewDetections& ref = views[order[0]];
  const CameraCalibration* ref_calib = calib_of.at(ref.camera_id);
  for (size_t i = 0; i < ref.poses.size(); ++i) {
    out.global_id[ref.camera_id][i] = static_cast<int>(clusters.size());
    clusters.push_back({{ref_calib, &ref.poses[i]}});
  }

  for (size_t vi = 1; vi < order.size(); ++vi) {
    const ViewDetections& view = views[order[vi]];
    const CameraCalibration* calib = calib_of.at(view.camera_id);
    const int n_cand = static_cast<int>(view.poses.size());
    const int n_clus = static_cast<int>(clusters.size());
    if (n_cand == 0) continue;

    std::vector<int> assigned(n_cand, -1);
    Eigen::MatrixXd cost(n_cand, std::max(n_clus, 1));
    if (n_clus > 0) {
      for (int i = 0; i < n_cand; ++i)
        for (int j = 0; j < n_clus; ++j)
          cost(i, j) = cluster_cost(clusters[j], *calib, view.poses[i],
                                    config.confidence_threshold);
      const std::vector<int> row_to_col = solve_assignment(cost);
      for (int i = 0; i < n_cand; ++i) {
        const int j = row_to_col[i];
        if (j >= 0 && j < n_clus && cost(i, j) <= config.gating_threshold) {
          assigned[i] = j;
          out.total_cost += cost(i, j);
        }
      }
    }

    for (int i = 0; i < n_cand; ++i) {
      int gid = assigned[i];
      if (gid < 0) {  // gated out or no clusters: new identity
        gid = static_cast<int>(clusters.size());
        clusters.emplace_back();
      }
      out.global_id[view.camera_id][i] = gid;
      clusters[gid].push_back({calib, &view.poses[i]});
    }
  }

  out.num_global_ids = static_cast<int>(clusters.size());
  return out;
}

}  // namespace mvpt
