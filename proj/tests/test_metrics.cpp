#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <utility>
#include <vector>

#include "mvpt/errors.hpp"
#include "mvpt/metrics.hpp"
#include "mvpt/rng.hpp"

using namespace mvpt;

namespace {

Pose2D pose2d(std::initializer_list<std::pair<double, double>> pts,
              double confidence = 1.0) {
  Pose2D pose;
  for (const auto& [u, v] : pts) pose.keypoints.push_back({u, v, confidence});
  return pose;
}

Pose3D pose3d(std::initializer_list<std::array<double, 3>> pts) {
  Pose3D pose;
  for (const auto& p : pts)
    pose.keypoints.push_back(Point3D::at(p[0], p[1], p[2]));
  return pose;
}

const BoundingBox kBox100{0, 0, 100, 80};  // largest dimension 100

// Straight-line reimplementation of the metric definitions, structured
// around per-pair threshold tables instead of adapters.
struct OracleMetrics {
  std::vector<double> errors;
  size_t pck_total = 0;
  size_t pck_correct_05 = 0;
  size_t pck_correct_10 = 0;

  void add(double err, double scale, bool pred_ok) {
    pck_total += 1;
    if (pred_ok) {
      errors.push_back(err);
      if (err <= 0.05 * scale) ++pck_correct_05;
      if (err <= 0.10 * scale) ++pck_correct_10;
    }
  }
  double rmse() const {
    double s = 0.0;
    for (const double e : errors) s += e * e;
    return std::sqrt(s / static_cast<double>(errors.size()));
  }
  double median() const {
    std::vector<double> sorted = errors;
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    return n % 2 ? sorted[n / 2]
                 : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
  }
  double pck05() const {
    return 100.0 * static_cast<double>(pck_correct_05) /
           static_cast<double>(pck_total);
  }
  double pck10() const {
    return 100.0 * static_cast<double>(pck_correct_10) /
           static_cast<double>(pck_total);
  }
};

}  // namespace

TEST_CASE("rmse of hand-picked errors") {
  // Errors 3 and 4 px: rmse = sqrt((9+16)/2) = sqrt(12.5).
  std::vector<EvalPair2D> pairs = {
      {pose2d({{3, 0}, {0, 4}}), pose2d({{0, 0}, {0, 0}}), kBox100}};
  CHECK(rmse(pairs) == doctest::Approx(std::sqrt(12.5)));
  CHECK(median_error(pairs) == doctest::Approx(3.5));  // (3+4)/2

  SUBCASE("odd count takes the middle value") {
    pairs.push_back({pose2d({{0, 10}}), pose2d({{0, 0}}), kBox100});
    // errors {3, 4, 10}
    CHECK(median_error(pairs) == doctest::Approx(4.0));
    CHECK(rmse(pairs) == doctest::Approx(std::sqrt((9.0 + 16.0 + 100.0) / 3)));
  }
}

TEST_CASE("3D distances are reported in millimeters") {
  // 1 mm error in meters.
  std::vector<EvalPair3D> pairs = {
      {pose3d({{0.001, 0, 0}, {1, 0, 0}}), pose3d({{0, 0, 0}, {1, 0, 0}})}};
  CHECK(rmse(pairs) == doctest::Approx(std::sqrt((1.0 + 0.0) / 2)));
  CHECK(median_error(pairs) == doctest::Approx(0.5));
  // Scale: gt max pairwise distance = 1 m = 1000 mm; pck10 threshold 100 mm.
  CHECK(pck(pairs, 0.10) == doctest::Approx(100.0));
}

TEST_CASE("pck thresholds are inclusive and use the right scale") {
  // Box 100 wide: pck05 threshold exactly 5 px.
  SUBCASE("error exactly at the threshold counts as correct") {
    std::vector<EvalPair2D> pairs = {
        {pose2d({{5, 0}}), pose2d({{0, 0}}), kBox100}};
    CHECK(pck(pairs, 0.05) == doctest::Approx(100.0));
  }
  SUBCASE("error just past the threshold does not") {
    std::vector<EvalPair2D> pairs = {
        {pose2d({{5.0001, 0}}), pose2d({{0, 0}}), kBox100}};
    CHECK(pck(pairs, 0.05) == doctest::Approx(0.0));
    CHECK(pck(pairs, 0.10) == doctest::Approx(100.0));
  }
  SUBCASE("largest box dimension sets the scale") {
    // Tall box: height 200 wins over width 50; pck05 threshold 10.
    const BoundingBox tall{0, 0, 50, 200};
    std::vector<EvalPair2D> pairs = {
        {pose2d({{8, 0}}), pose2d({{0, 0}}), tall}};
    CHECK(pck(pairs, 0.05) == doctest::Approx(100.0));
  }
  SUBCASE("half correct") {
    std::vector<EvalPair2D> pairs = {
        {pose2d({{3, 0}, {40, 0}}), pose2d({{0, 0}, {0, 0}}), kBox100}};
    CHECK(pck(pairs, 0.05) == doctest::Approx(50.0));
    CHECK(pck(pairs, 0.10) == doctest::Approx(50.0));
  }
}

TEST_CASE("3D pck scale is the max pairwise valid ground-truth distance") {
  // gt spread: max distance 2 m (first to third). pck10 threshold 200 mm.
  Pose3D gt = pose3d({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
  Pose3D pred = pose3d({{0.15, 0, 0}, {1, 0, 0}, {2, 0, 0}});
  std::vector<EvalPair3D> pairs = {{pred, gt}};
  CHECK(pck(pairs, 0.10) == doctest::Approx(100.0));  // 150 <= 200
  CHECK(pck(pairs, 0.05) == doctest::Approx(200.0 / 3.0));  // 150 > 100

  SUBCASE("invalid gt keypoints do not contribute to the scale") {
    gt.keypoints[2].valid = false;  // spread shrinks to 1 m
    std::vector<EvalPair3D> shrunk = {{pred, gt}};
    // 150 mm > 100 mm threshold now; only 1 of 2 evaluated is correct.
    CHECK(pck(shrunk, 0.10) == doctest::Approx(50.0));
  }
}

TEST_CASE("prediction misses enter pck but not rmse or median") {
  Pose2D pred = pose2d({{1, 0}, {0, 0}});
  pred.keypoints[1].confidence = 0.0;  // missing prediction
  const Pose2D gt = pose2d({{0, 0}, {50, 50}});
  std::vector<EvalPair2D> pairs = {{pred, gt, kBox100}};
  // Only keypoint 0 is evaluated for rmse: error 1.
  CHECK(rmse(pairs) == doctest::Approx(1.0));
  CHECK(median_error(pairs) == doctest::Approx(1.0));
  // PCK denominator includes the miss: 1 correct of 2.
  CHECK(pck(pairs, 0.05) == doctest::Approx(50.0));
  const MetricsReport report = per_keypoint_report(pairs);
  CHECK(report.overall.n_evaluated == 1);
  CHECK(report.overall.n_missing == 1);

  SUBCASE("invalid ground truth drops the keypoint entirely") {
    Pose2D gt2 = gt;
    gt2.keypoints[1].confidence = 0.0;
    std::vector<EvalPair2D> both = {{pred, gt2, kBox100}};
    CHECK(pck(both, 0.05) == doctest::Approx(100.0));
    const MetricsReport r2 = per_keypoint_report(both);
    CHECK(r2.overall.n_evaluated == 1);
    CHECK(r2.overall.n_missing == 0);
  }
}

TEST_CASE("error cases") {
  std::vector<EvalPair2D> pairs = {
      {pose2d({{1, 0}}), pose2d({{0, 0}}), kBox100}};
  SUBCASE("pck fraction must be one of the two supported values") {
    CHECK_THROWS_AS(pck(pairs, 0.07), InvalidConfig);
    CHECK_THROWS_AS(pck(pairs, 0.0), InvalidConfig);
    CHECK_NOTHROW(pck(pairs, 0.05));
    CHECK_NOTHROW(pck(pairs, 0.10));
  }
  SUBCASE("degenerate 2D box") {
    std::vector<EvalPair2D> bad = {
        {pose2d({{1, 0}}), pose2d({{0, 0}}), BoundingBox{10, 10, 10, 40}}};
    CHECK_THROWS_AS(pck(bad, 0.05), MissingBBox);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<EvalPair2D> nan_box = {
        {pose2d({{1, 0}}), pose2d({{0, 0}}), BoundingBox{nan, 0, 10, 10}}};
    CHECK_THROWS_AS(pck(nan_box, 0.05), MissingBBox);
  }
  SUBCASE("3D scale with fewer than two valid gt keypoints") {
    Pose3D gt = pose3d({{0, 0, 0}, {1, 0, 0}});
    gt.keypoints[1].valid = false;
    std::vector<EvalPair3D> bad = {{pose3d({{0, 0, 0}, {1, 0, 0}}), gt}};
    CHECK_THROWS_AS(pck(bad, 0.05), DegenerateScale);
  }
  SUBCASE("nothing valid on both sides") {
    Pose2D dead = pose2d({{0, 0}}, 0.0);
    std::vector<EvalPair2D> none = {{dead, dead, kBox100}};
    CHECK_THROWS_AS(rmse(none), NoValidKeypoints);
    CHECK_THROWS_AS(median_error(none), NoValidKeypoints);
    CHECK_THROWS_AS(pck(none, 0.05), NoValidKeypoints);
    CHECK_THROWS_AS(rmse(std::vector<EvalPair2D>{}), NoValidKeypoints);
  }
}

TEST_CASE("metrics agree with a brute-force oracle on random data") {
  Rng rng(1234);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<EvalPair2D> pairs2d;
    std::vector<EvalPair3D> pairs3d;
    OracleMetrics oracle2d, oracle3d;

    const int n_pairs = 1 + static_cast<int>(rng.uniform_index(6));
    for (int i = 0; i < n_pairs; ++i) {
      EvalPair2D p2;
      const double w = rng.uniform(50.0, 300.0);
      const double h = rng.uniform(50.0, 300.0);
      p2.gt_bbox = {0, 0, w, h};
      EvalPair3D p3;
      // 3D gt: anchor three reference points so the scale never degenerates.
      p3.ground_truth.keypoints.push_back(Point3D::at(0, 0, 0));
      p3.predicted.keypoints.push_back(Point3D::at(0, 0, 0));
      p3.ground_truth.keypoints.push_back(Point3D::at(0.8, 0, 0));
      p3.predicted.keypoints.push_back(Point3D::at(0.8, 0, 0));

      for (int k = 0; k < 9; ++k) {
        const double gu = rng.uniform(0.0, w), gv = rng.uniform(0.0, h);
        const bool gt_ok = rng.bernoulli(0.85);
        const bool pred_ok = rng.bernoulli(0.8);
        p2.ground_truth.keypoints.push_back({gu, gv, gt_ok ? 1.0 : 0.0});
        p2.predicted.keypoints.push_back({gu + rng.normal(0, 8.0),
                                          gv + rng.normal(0, 8.0),
                                          pred_ok ? rng.uniform(0.1, 1.0) : 0.0});
        Point3D g3 = Point3D::at(rng.uniform(-0.3, 0.3),
                                 rng.uniform(-0.3, 0.3),
                                 rng.uniform(-0.3, 0.3));
        g3.valid = rng.bernoulli(0.85);
        Point3D q3 = Point3D::at(g3.x + rng.normal(0, 0.05),
                                 g3.y + rng.normal(0, 0.05),
                                 g3.z + rng.normal(0, 0.05));
        q3.valid = rng.bernoulli(0.8);
        p3.ground_truth.keypoints.push_back(g3);
        p3.predicted.keypoints.push_back(q3);
      }
      pairs2d.push_back(p2);
      pairs3d.push_back(p3);

      // Feed the oracle. 2D scale: largest box dimension.
      const double scale2 = std::max(w, h);
      for (size_t k = 0; k < p2.ground_truth.keypoints.size(); ++k) {
        if (p2.ground_truth.keypoints[k].confidence <= 0.0) continue;
        const bool ok = p2.predicted.keypoints[k].confidence > 0.0;
        oracle2d.add(euclidean(p2.predicted.keypoints[k],
                               p2.ground_truth.keypoints[k]),
                     scale2, ok);
      }
      // 3D scale: max pairwise distance among valid gt keypoints, in mm.
      double scale3 = 0.0;
      const auto& gk = p3.ground_truth.keypoints;
      for (size_t a = 0; a < gk.size(); ++a)
        for (size_t b = a + 1; b < gk.size(); ++b)
          if (gk[a].valid && gk[b].valid)
            scale3 = std::max(scale3, 1000.0 * euclidean(gk[a], gk[b]));
      for (size_t k = 0; k < gk.size(); ++k) {
        if (!gk[k].valid) continue;
        oracle3d.add(1000.0 * euclidean(p3.predicted.keypoints[k], gk[k]),
                     scale3, p3.predicted.keypoints[k].valid);
      }
    }
    if (oracle2d.errors.empty() || oracle3d.errors.empty()) continue;

    CHECK(rmse(pairs2d) == doctest::Approx(oracle2d.rmse()).epsilon(1e-12));
    CHECK(median_error(pairs2d) ==
          doctest::Approx(oracle2d.median()).epsilon(1e-12));
    CHECK(pck(pairs2d, 0.05) ==
          doctest::Approx(oracle2d.pck05()).epsilon(1e-12));
    CHECK(pck(pairs2d, 0.10) ==
          doctest::Approx(oracle2d.pck10()).epsilon(1e-12));

    CHECK(rmse(pairs3d) == doctest::Approx(oracle3d.rmse()).epsilon(1e-12));
    CHECK(median_error(pairs3d) ==
          doctest::Approx(oracle3d.median()).epsilon(1e-12));
    CHECK(pck(pairs3d, 0.05) ==
          doctest::Approx(oracle3d.pck05()).epsilon(1e-12));
    CHECK(pck(pairs3d, 0.10) ==
          doctest::Approx(oracle3d.pck10()).epsilon(1e-12));
  }
}

TEST_CASE("pck05 never exceeds pck10") {
  Rng rng(555);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<EvalPair2D> pairs;
    EvalPair2D p;
    p.gt_bbox = {0, 0, 120, 90};
    for (int k = 0; k < 9; ++k) {
      const double u = rng.uniform(0.0, 120.0), v = rng.uniform(0.0, 90.0);
      p.ground_truth.keypoints.push_back({u, v, 1.0});
      p.predicted.keypoints.push_back(
          {u + rng.normal(0, 6.0), v + rng.normal(0, 6.0), 1.0});
    }
    pairs.push_back(p);
    CHECK(pck(pairs, 0.05) <= pck(pairs, 0.10));
  }
}

TEST_CASE("2D metrics are translation invariant, 3D scale doubles with the scene") {
  Rng rng(777);
  std::vector<EvalPair2D> pairs, shifted;
  EvalPair2D p;
  p.gt_bbox = {10, 20, 110, 100};
  for (int k = 0; k < 9; ++k) {
    const double u = rng.uniform(10.0, 110.0), v = rng.uniform(20.0, 100.0);
    p.ground_truth.keypoints.push_back({u, v, 1.0});
    p.predicted.keypoints.push_back(
        {u + rng.normal(0, 4.0), v + rng.normal(0, 4.0), 1.0});
  }
  pairs.push_back(p);
  EvalPair2D q = p;
  for (auto& kp : q.ground_truth.keypoints) {
    kp.u += 500;
    kp.v -= 300;
  }
  for (auto& kp : q.predicted.keypoints) {
    kp.u += 500;
    kp.v -= 300;
  }
  q.gt_bbox = {510, -280, 610, -200};
  shifted.push_back(q);
  CHECK(rmse(pairs) == doctest::Approx(rmse(shifted)));
  CHECK(pck(pairs, 0.05) == doctest::Approx(pck(shifted, 0.05)));

  // Doubling every 3D coordinate doubles rmse and preserves pck: the scale
  // threshold grows with the scene.
  std::vector<EvalPair3D> base, doubled;
  EvalPair3D b;
  for (int k = 0; k < 9; ++k) {
    Point3D g = Point3D::at(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                            rng.uniform(-0.2, 0.2));
    Point3D pr = Point3D::at(g.x + rng.normal(0, 0.01),
                             g.y + rng.normal(0, 0.01),
                             g.z + rng.normal(0, 0.01));
    b.ground_truth.keypoints.push_back(g);
    b.predicted.keypoints.push_back(pr);
  }
  base.push_back(b);
  EvalPair3D d = b;
  for (auto& kp : d.ground_truth.keypoints) {
    kp.x *= 2;
    kp.y *= 2;
    kp.z *= 2;
  }
  for (auto& kp : d.predicted.keypoints) {
    kp.x *= 2;
    kp.y *= 2;
    kp.z *= 2;
  }
  doubled.push_back(d);
  CHECK(rmse(doubled) == doctest::Approx(2.0 * rmse(base)));
  CHECK(pck(doubled, 0.10) == doctest::Approx(pck(base, 0.10)));
}

TEST_CASE("pair order does not change any metric") {
  Rng rng(888);
  std::vector<EvalPair2D> pairs;
  for (int i = 0; i < 5; ++i) {
    EvalPair2D p;
    p.gt_bbox = {0, 0, rng.uniform(60.0, 200.0), rng.uniform(60.0, 200.0)};
    for (int k = 0; k < 9; ++k) {
      const double u = rng.uniform(0.0, 60.0), v = rng.uniform(0.0, 60.0);
      p.ground_truth.keypoints.push_back({u, v, 1.0});
      p.predicted.keypoints.push_back(
          {u + rng.normal(0, 3.0), v + rng.normal(0, 3.0), 1.0});
    }
    pairs.push_back(p);
  }
  std::vector<EvalPair2D> reversed(pairs.rbegin(), pairs.rend());
  CHECK(rmse(pairs) == doctest::Approx(rmse(reversed)).epsilon(1e-12));
  CHECK(median_error(pairs) ==
        doctest::Approx(median_error(reversed)).epsilon(1e-12));
  CHECK(pck(pairs, 0.05) == doctest::Approx(pck(reversed, 0.05)));
  CHECK(pck(pairs, 0.10) == doctest::Approx(pck(reversed, 0.10)));
}

TEST_CASE("per-keypoint report matches per-keypoint recomputation") {
  Rng rng(321);
  std::vector<EvalPair2D> pairs;
  for (int i = 0; i < 4; ++i) {
    EvalPair2D p;
    p.gt_bbox = {0, 0, 150, 100};
    for (int k = 0; k < 9; ++k) {
      const double u = rng.uniform(0.0, 150.0), v = rng.uniform(0.0, 100.0);
      p.ground_truth.keypoints.push_back({u, v, rng.bernoulli(0.9) ? 1.0 : 0.0});
      p.predicted.keypoints.push_back({u + rng.normal(0, 5.0),
                                       v + rng.normal(0, 5.0),
                                       rng.bernoulli(0.85) ? 1.0 : 0.0});
    }
    pairs.push_back(p);
  }
  const MetricsReport report = per_keypoint_report(pairs);
  REQUIRE(report.per_keypoint.size() == 9);
  CHECK(report.unit == "px");

  for (int k = 0; k < 9; ++k) {
    // Reduce to single-keypoint pairs and recompute with the public API.
    std::vector<EvalPair2D> solo;
    for (const auto& p : pairs) {
      EvalPair2D s;
      s.gt_bbox = p.gt_bbox;
      s.ground_truth.keypoints.push_back(
          p.ground_truth.keypoints[static_cast<size_t>(k)]);
      s.predicted.keypoints.push_back(
          p.predicted.keypoints[static_cast<size_t>(k)]);
      solo.push_back(s);
    }
    const auto& v = report.per_keypoint[static_cast<size_t>(k)];
    if (v.n_evaluated > 0) {
      CHECK(v.rmse == doctest::Approx(rmse(solo)).epsilon(1e-12));
      CHECK(v.median ==
            doctest::Approx(median_error(solo)).epsilon(1e-12));
    } else {
      CHECK(std::isnan(v.rmse));
    }
    if (v.n_evaluated + v.n_missing > 0) {
      CHECK(v.pck05 == doctest::Approx(pck(solo, 0.05)).epsilon(1e-12));
      CHECK(v.pck10 == doctest::Approx(pck(solo, 0.10)).epsilon(1e-12));
    }
  }
}

TEST_CASE("report table is byte-stable and well-formed") {
  std::vector<EvalPair3D> pairs = {
      {pose3d({{0.001, 0, 0}, {1, 0, 0}, {0, 0.5, 0}}),
       pose3d({{0, 0, 0}, {1, 0, 0}, {0, 0.5, 0}})}};
  const MetricsReport report = per_keypoint_report(pairs);
  const std::string a = format_report_table(report);
  const std::string b = format_report_table(report);
  CHECK(a == b);
  CHECK(a.find("Metric") == 0);
  CHECK(a.find("Overall") != std::string::npos);
  CHECK(a.find("RMSE (mm)") != std::string::npos);
  CHECK(a.find("PCK05 (%)") != std::string::npos);
  CHECK(a.find("beak") != std::string::npos);
  // Four metric rows + header + footer.
  CHECK(std::count(a.begin(), a.end(), '\n') == 6);
}
