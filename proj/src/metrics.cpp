#include "mvpt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mvpt/errors.hpp"

namespace mvpt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool valid2d(const Point2D& p) {
  return p.confidence > 0.0 && std::isfinite(p.u) && std::isfinite(p.v);
}

// Adapters so every metric is written once against a common shape.
struct Adapter2D {
  static size_t count(const EvalPair2D& p) {
    return p.ground_truth.keypoints.size();
  }
  static bool gt_valid(const EvalPair2D& p, size_t k) {
    return valid2d(p.ground_truth.keypoints[k]);
  }
  static bool pred_valid(const EvalPair2D& p, size_t k) {
    return k < p.predicted.keypoints.size() && valid2d(p.predicted.keypoints[k]);
  }
  static double distance(const EvalPair2D& p, size_t k) {
    return euclidean(p.predicted.keypoints[k], p.ground_truth.keypoints[k]);
  }
  static double pck_scale(const EvalPair2D& p) {
    if (!p.gt_bbox.valid())
      throw MissingBBox("2D PCK needs a valid ground-truth bounding box");
    return std::max(p.gt_bbox.width(), p.gt_bbox.height());
  }
  static constexpr const char* unit() { return "px"; }
};

struct Adapter3D {
  static size_t count(const EvalPair3D& p) {
    return p.ground_truth.keypoints.size();
  }
  static bool gt_valid(const EvalPair3D& p, size_t k) {
    return p.ground_truth.keypoints[k].valid;
  }
  static bool pred_valid(const EvalPair3D& p, size_t k) {
    return k < p.predicted.keypoints.size() && p.predicted.keypoints[k].valid;
  }
  // Poses are in meters; all reported 3D distances are millimeters.
  static double distance(const EvalPair3D& p, size_t k) {
    return 1000.0 * euclidean(p.predicted.keypoints[k],
                              p.ground_truth.keypoints[k]);
  }
  static double pck_scale(const EvalPair3D& p) {
    double scale = 0.0;
    int n_valid = 0;
    const auto& kps = p.ground_truth.keypoints;
    for (size_t a = 0; a < kps.size(); ++a) {
      if (!kps[a].valid) continue;
      ++n_valid;
      for (size_t b = a + 1; b < kps.size(); ++b)
        if (kps[b].valid)
          scale = std::max(scale, 1000.0 * euclidean(kps[a], kps[b]));
    }
    if (n_valid < 2)
      throw DegenerateScale(
          "3D PCK scale needs >= 2 valid ground-truth keypoints");
    return scale;
  }
  static constexpr const char* unit() { return "mm"; }
};

// keypoint filter: negative = all keypoints.
template <class A, class Pairs>
std::vector<double> collect_errors(const Pairs& pairs, int keypoint) {
  std::vector<double> errors;
  for (const auto& p : pairs) {
    for (size_t k = 0; k < A::count(p); ++k) {
      if (keypoint >= 0 && static_cast<size_t>(keypoint) != k) continue;
      if (A::gt_valid(p, k) && A::pred_valid(p, k))
        errors.push_back(A::distance(p, k));
    }
  }
  return errors;
}

double rmse_of(std::vector<double> errors) {
  if (errors.empty())
    throw NoValidKeypoints("no keypoint is valid in both poses");
  double sum_sq = 0.0;
  for (const double e : errors) sum_sq += e * e;
  return std::sqrt(sum_sq / static_cast<double>(errors.size()));
}

double median_of(std::vector<double> errors) {
  if (errors.empty())
    throw NoValidKeypoints("no keypoint is valid in both poses");
  std::sort(errors.begin(), errors.end());
  const size_t n = errors.size();
  if (n % 2 == 1) return errors[n / 2];
  return (errors[n / 2 - 1] + errors[n / 2]) / 2.0;
}

template <class A, class Pairs>
double pck_of(const Pairs& pairs, double fraction, int keypoint) {
  if (fraction != 0.05 && fraction != 0.10)
    throw InvalidConfig("PCK fraction must be 0.05 or 0.10");
  size_t correct = 0, total = 0;
  for (const auto& p : pairs) {
    double threshold = -1.0;  // computed on first contributing keypoint
    for (size_t k = 0; k < A::count(p); ++k) {
      if (keypoint >= 0 && static_cast<size_t>(keypoint) != k) continue;
      if (!A::gt_valid(p, k)) continue;
      if (threshold < 0.0) threshold = fraction * A::pck_scale(p);
      ++total;  // prediction misses count as evaluated and incorrect
      if (A::pred_valid(p, k) && A::distance(p, k) <= threshold) ++correct;
    }
  }
  if (total == 0)
    throw NoValidKeypoints("no ground-truth keypoint to evaluate");
  return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

template <class A, class Pairs>
MetricValues values_of(const Pairs& pairs, int keypoint) {
  MetricValues v;
  for (const auto& p : pairs) {
    for (size_t k = 0; k < A::count(p); ++k) {
      if (keypoint >= 0 && static_cast<size_t>(keypoint) != k) continue;
      if (!A::gt_valid(p, k)) continue;
      if (A::pred_valid(p, k))
        ++v.n_evaluated;
      else
        ++v.n_missing;
    }
  }
  if (v.n_evaluated > 0) {
    auto errors = collect_errors<A>(pairs, keypoint);
    v.rmse = rmse_of(errors);
    v.median = median_of(std::move(errors));
  } else {
    v.rmse = kNaN;
    v.median = kNaN;
  }
  if (v.n_evaluated + v.n_missing > 0) {
    v.pck05 = pck_of<A>(pairs, 0.05, keypoint);
    v.pck10 = pck_of<A>(pairs, 0.10, keypoint);
  } else {
    v.pck05 = kNaN;
    v.pck10 = kNaN;
  }
  return v;
}

template <class A, class Pairs>
MetricsReport report_of(const Pairs& pairs) {
  size_t n_kp = 0;
  for (const auto& p : pairs) n_kp = std::max(n_kp, A::count(p));

  MetricsReport report;
  report.unit = A::unit();
  report.overall = values_of<A>(pairs, -1);
  for (size_t k = 0; k < n_kp; ++k)
    report.per_keypoint.push_back(values_of<A>(pairs, static_cast<int>(k)));
  return report;
}

}  // namespace

double rmse(const std::vector<EvalPair2D>& pairs) {
  return rmse_of(collect_errors<Adapter2D>(pairs, -1));
}
double rmse(const std::vector<EvalPair3D>& pairs) {
  return rmse_of(collect_errors<Adapter3D>(pairs, -1));
}

double median_error(const std::vector<EvalPair2D>& pairs) {
  return median_of(collect_errors<Adapter2D>(pairs, -1));
}
double median_error(const std::vector<EvalPair3D>& pairs) {
  return median_of(collect_errors<Adapter3D>(pairs, -1));
}

double pck(const std::vector<EvalPair2D>& pairs, double fraction) {
  return pck_of<Adapter2D>(pairs, fraction, -1);
}
double pck(const std::vector<EvalPair3D>& pairs, double fraction) {
  return pck_of<Adapter3D>(pairs, fraction, -1);
}

MetricsReport per_keypoint_report(const std::vector<EvalPair2D>& pairs) {
  return report_of<Adapter2D>(pairs);
}
MetricsReport per_keypoint_report(const std::vector<EvalPair3D>& pairs) {
  return report_of<Adapter3D>(pairs);
}

std::string format_report_table(const MetricsReport& report) {
  const int name_width = 12;
  const int col_width = 15;
  char buf[64];
  std::string out;

  auto cell = [&](const std::string& text) {
    std::snprintf(buf, sizeof(buf), "%*s", col_width, text.c_str());
    out += buf;
  };
  auto num = [&](double v) {
    if (std::isnan(v)) {
      cell("-");
    } else {
      std::snprintf(buf, sizeof(buf), "%*.4f", col_width, v);
      out += buf;
    }
  };

  std::snprintf(buf, sizeof(buf), "%-*s", name_width, "Metric");
  out += buf;
  cell("Overall");
  for (size_t k = 0; k < report.per_keypoint.size(); ++k)
    cell(k < kKeypointNames.size() ? std::string(kKeypointNames[k])
                                   : "kp" + std::to_string(k));
  out += "\n";

  const char* unit = report.unit.c_str();
  auto row = [&](const std::string& label, auto getter) {
    std::snprintf(buf, sizeof(buf), "%-*s", name_width, label.c_str());
    out += buf;
    num(getter(report.overall));
    for (const auto& v : report.per_keypoint) num(getter(v));
    out += "\n";
  };
  row("RMSE (" + std::string(unit) + ")",
      [](const MetricValues& v) { return v.rmse; });
  row("Median (" + std::string(unit) + ")",
      [](const MetricValues& v) { return v.median; });
  row("PCK05 (%)", [](const MetricValues& v) { return v.pck05; });
  row("PCK10 (%)", [](const MetricValues& v) { return v.pck10; });

  std::snprintf(buf, sizeof(buf),
                "Evaluated keypoints: %zu (missing predictions: %zu)\n",
                report.overall.n_evaluated, report.overall.n_missing);
  out += buf;
  return out;
}

}  // namespace mvpt
