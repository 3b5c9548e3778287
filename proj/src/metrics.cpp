#include "homkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace homkit {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

MetricSummary summarize_metric(const std::vector<double>& errors,
                               const ThresholdGrid& grid) {
  MetricSummary s;
  double sum = 0;
  for (double e : errors) sum += e;
  s.mean = sum / static_cast<double>(errors.size());
  s.median = median_of(errors);
  s.maa = maa(errors, grid);
  return s;
}

}  // namespace

double rotation_error_deg(const Rotation3& r, const Rotation3& r_prime) {
  // Angle from the axis part of the relative rotation: atan2 of the
  // antisymmetric norm against the trace stays well conditioned at 0 and 180
  // degrees, where acos((tr - 1) / 2) loses half the significant digits.
  const Eigen::Matrix3d d = r_prime.matrix() * r.matrix().transpose();
  const Eigen::Vector3d axis(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0),
                             d(1, 0) - d(0, 1));
  return kRadToDeg * std::atan2(axis.norm(), d.trace() - 1.0);
}

double translation_angle_error_deg(const Eigen::Vector3d& t,
                                   const Eigen::Vector3d& t_prime) {
  const double n1 = t.norm(), n2 = t_prime.norm();
  if (!(n1 > 0.0) || !(n2 > 0.0))
    throw InvalidInput("translation_angle_error: zero-length translation");
  // atan2 of the parallelogram area against the dot product; exact at both
  // parallel and antiparallel configurations.
  const Eigen::Vector3d u = t / n1, v = t_prime / n2;
  return kRadToDeg * std::atan2(u.cross(v).norm(), u.dot(v));
}

double translation_abs_error(const Eigen::Vector3d& t,
                             const Eigen::Vector3d& t_prime) {
  return (t - t_prime).norm();
}

ThresholdGrid::ThresholdGrid(std::vector<double> values, ThresholdUnit unit)
    : values_(std::move(values)), unit_(unit) {
  if (values_.empty()) throw InvalidInput("ThresholdGrid: empty");
  double prev = 0.0;
  for (double v : values_) {
    if (!(v > prev) || !std::isfinite(v))
      throw InvalidInput("ThresholdGrid: values must be positive and strictly increasing");
    prev = v;
  }
}

ThresholdGrid ThresholdGrid::degrees_default() {
  std::vector<double> v;
  for (int i = 1; i <= 10; ++i) v.push_back(i);
  return ThresholdGrid(std::move(v), ThresholdUnit::degrees);
}

ThresholdGrid ThresholdGrid::meters_default() {
  std::vector<double> v;
  constexpr int kSteps = 20;
  for (int i = 0; i < kSteps; ++i)
    v.push_back(0.1 + (5.0 - 0.1) * i / (kSteps - 1));
  return ThresholdGrid(std::move(v), ThresholdUnit::meters);
}

ThresholdGrid ThresholdGrid::pixels_default() {
  std::vector<double> v;
  for (int i = 1; i <= 20; ++i) v.push_back(i);
  return ThresholdGrid(std::move(v), ThresholdUnit::pixels);
}

double maa(std::span<const double> errors, const ThresholdGrid& grid) {
  if (errors.empty()) throw InvalidInput("maa: no errors given");
  double acc = 0.0;
  for (double tau : grid.values()) {
    int hits = 0;
    for (double e : errors)
      if (e <= tau) ++hits;
    acc += static_cast<double>(hits) / static_cast<double>(errors.size());
  }
  return acc / static_cast<double>(grid.values().size());
}

PairErrors PairErrors::failure(double runtime_s) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return PairErrors{inf, inf, inf, inf, 0, runtime_s};
}

SceneSummary summarize_scene(std::span<const PairErrors> pairs,
                             const MetricGrids& grids) {
  if (pairs.empty()) throw InvalidInput("summarize_scene: no pairs");
  std::vector<double> rot, trans_angle, trans_abs, reproj, inliers, runtime;
  rot.reserve(pairs.size());
  for (const PairErrors& p : pairs) {
    rot.push_back(p.rot_deg);
    trans_angle.push_back(p.trans_angle_deg);
    trans_abs.push_back(p.trans_abs_m);
    reproj.push_back(p.reproj_px);
    inliers.push_back(p.inlier_count);
    runtime.push_back(p.runtime_s);
  }
  SceneSummary s;
  s.rot = summarize_metric(rot, grids.degrees);
  s.trans_angle = summarize_metric(trans_angle, grids.degrees);
  s.trans_abs = summarize_metric(trans_abs, grids.meters);
  s.reproj = summarize_metric(reproj, grids.pixels);
  s.combined_pose_maa = 0.5 * (s.rot.maa + s.trans_angle.maa);
  s.median_inliers = median_of(inliers);
  s.median_runtime_s = median_of(runtime);
  return s;
}

}  // namespace homkit
