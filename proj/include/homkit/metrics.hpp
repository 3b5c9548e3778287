#pragma once

#include <span>
#include <vector>

#include "homkit/geom.hpp"

namespace homkit {

/// Angular rotation difference in degrees:
/// (180/pi) * arccos(clamp((trace(R'*R^T) - 1) / 2, -1, 1)).
double rotation_error_deg(const Rotation3& r, const Rotation3& r_prime);

/// Angle between translation directions in degrees (norms divided out).
/// Throws InvalidInput when either vector is zero.
double translation_angle_error_deg(const Eigen::Vector3d& t,
                                   const Eigen::Vector3d& t_prime);

/// Euclidean distance |t - t'| in meters. Callers are responsible for putting
/// both vectors on the same metric scale beforehand.
double translation_abs_error(const Eigen::Vector3d& t,
                             const Eigen::Vector3d& t_prime);

enum class ThresholdUnit { degrees, meters, pixels };

/// Strictly increasing positive thresholds with a unit tag.
class ThresholdGrid {
 public:
  ThresholdGrid(std::vector<double> values, ThresholdUnit unit);

  const std::vector<double>& values() const { return values_; }
  ThresholdUnit unit() const { return unit_; }

  /// 1..10 degrees in steps of 1.
  static ThresholdGrid degrees_default();
  /// 20 uniform steps spanning 0.1..5 meters.
  static ThresholdGrid meters_default();
  /// 1..20 pixels in steps of 1.
  static ThresholdGrid pixels_default();

 private:
  std::vector<double> values_;
  ThresholdUnit unit_;
};

/// Mean average accuracy: mean over thresholds of the fraction of errors at
/// or below the threshold. Failed estimates must be encoded as +infinity so
/// they count against every threshold. Throws InvalidInput on empty input.
double maa(std::span<const double> errors, const ThresholdGrid& grid);

/// Per-pair evaluation of one estimate against ground truth. Failures are
/// encoded as +infinity in every error field.
struct PairErrors {
  double rot_deg = 0;
  double trans_angle_deg = 0;
  double trans_abs_m = 0;
  double reproj_px = 0;
  int inlier_count = 0;
  double runtime_s = 0;

  static PairErrors failure(double runtime_s);
};

struct MetricSummary {
  double mean = 0;
  double median = 0;
  double maa = 0;
};

/// The three threshold grids used to summarize a scene.
struct MetricGrids {
  ThresholdGrid degrees = ThresholdGrid::degrees_default();
  ThresholdGrid meters = ThresholdGrid::meters_default();
  ThresholdGrid pixels = ThresholdGrid::pixels_default();
};

/// Aggregate over the pairs of one scene. combined_pose_maa is the average of
/// the rotation and translation-angle mAA values.
struct SceneSummary {
  MetricSummary rot;
  MetricSummary trans_angle;
  MetricSummary trans_abs;
  MetricSummary reproj;
  double combined_pose_maa = 0;
  double median_inliers = 0;
  double median_runtime_s = 0;
};

SceneSummary summarize_scene(std::span<const PairErrors> pairs,
                             const MetricGrids& grids);

}  // namespace homkit
