#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "homkit/geom.hpp"
#include "homkit/rng.hpp"

namespace homkit {

/// Parameters of the synthetic two-view generator. Distances are meters,
/// image quantities pixels, angles degrees unless noted.
struct SceneConfig {
  int image_width = 1024;
  int image_height = 768;
  double focal_px = 800.0;
  int num_planes = 2;
  int points_per_plane = 50;
  double noise_px = 1.0;          // Gaussian pixel noise, both images
  double outlier_fraction = 0.3;  // fraction of the final correspondence set
  double baseline_min_m = 0.8;
  double baseline_max_m = 1.6;
  double rotation_max_deg = 10.0;
  double depth_min_m = 4.0;
  double depth_max_m = 6.5;
  double patch_radius_m = 1.8;    // half-extent of each plane patch
  double plane_tilt_max_deg = 25.0;
  double epsilon_px = 3.0;        // inlier gate used to label ground truth
  double sift_angle_noise_deg = 12.0;  // orientation residual stddev
  double sift_scale_log_noise = 0.2;   // log-normal scale residual stddev
  std::uint64_t seed = 0;

  void validate() const;
};

/// One benchmark unit: the correspondences of a stereo pair restricted to a
/// single dominant plane (plus shared outliers), with ground truth.
struct TestCase {
  std::string id;
  std::vector<Correspondence> corrs;
  Homography h_norm;   // homography on calibrated coordinates
  Pose rel_pose;       // camera-1 to camera-2, metric translation
  Eigen::Matrix3d k1 = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d k2 = Eigen::Matrix3d::Identity();
  double scale_m = 1.0;
  double epsilon_px = 3.0;
  std::vector<int> inlier_indices;  // sorted, reprojection <= epsilon under GT
  std::string split = "test";

  /// Ground-truth homography on pixel coordinates: K2 * H * K1^-1.
  Homography pixel_homography() const;
};

/// Ground truth of one plane inside a multi-plane pair.
struct PlaneTruth {
  Plane3 plane;
  Homography h_norm;
  /// Correspondences whose reprojection error is <= epsilon under h_norm.
  std::vector<int> inlier_indices;
  /// Correspondences that were drawn from this plane (generator metadata;
  /// unlike inlier_indices this ignores the epsilon gate).
  std::vector<int> constructed_indices;
};

/// A stereo pair observing several planes at once, before splitting.
struct PairObservations {
  std::string id;
  std::vector<Correspondence> corrs;
  std::vector<PlaneTruth> planes;
  Pose rel_pose;
  Eigen::Matrix3d k1 = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d k2 = Eigen::Matrix3d::Identity();
  double scale_m = 1.0;
  double epsilon_px = 3.0;
};

struct SceneData {
  Pose camera1;  // world frame anchored at camera 1
  Pose camera2;
  std::vector<Plane3> planes;
  PairObservations pair;
  std::vector<TestCase> cases;
};

/// Generates one two-camera scene with num_planes textured patches, Gaussian
/// pixel noise, synthesized SIFT attributes and uniform outliers, then splits
/// it into per-plane test cases. Throws InfeasibleGeometry when no visible
/// configuration is found within the retry budget.
SceneData generate_scene(const SceneConfig& config);

/// Splits a multi-plane pair into one TestCase per plane. Case k keeps every
/// correspondence except the exclusive inliers of the other planes, so
/// correspondences shared between planes stay in both cases.
std::vector<TestCase> split_test_cases(const PairObservations& pair);

struct ValidationConfig {
  double epsilon_px = 3.0;       // inlier gate on reprojection error
  int min_inliers = 10;
  double max_rot_err_deg = 3.0;
  double max_trans_err_deg = 3.0;
};

enum class ValidationFailure {
  none,
  too_few_inliers,
  degenerate,
  pose_mismatch,
};

struct ValidationResult {
  bool accepted = false;
  ValidationFailure failure = ValidationFailure::none;
  int inlier_count = 0;
  double rot_err_deg = 0;
  double trans_err_deg = 0;
};

/// Ground-truth gate: recounts inliers at epsilon under the stored pixel
/// homography, refits with DLT, decomposes on calibrated coordinates and
/// compares the best candidate against the stored relative pose. Accepts only
/// when both angular errors stay within the configured limits.
ValidationResult validate_homography(const TestCase& tc,
                                     const ValidationConfig& config);

/// Sequential RANSAC plane extraction from a 3D point cloud: repeatedly fits
/// the best plane (inlier distance <= threshold_m), refits on its support by
/// least squares and removes it, until no plane reaches min_points support.
/// Returns planes with d > 0 canonically, strongest support first.
std::vector<Plane3> extract_planes(std::span<const Eigen::Vector3d> points,
                                   double threshold_m, int min_points,
                                   Rng& rng);

/// Fronto-parallel reference patch at depth z0 with depth gradients
/// (dz/dx, dz/dy); the induced local affinity between the rectified views is
/// [[1 + zx/z0, zy/z0], [0, 1]].
struct SlopedPlaneConfig {
  double z0 = 1.0;
  double zx = 0.0;
  double zy = 0.0;
};

Affine2 slope_affinity(const SlopedPlaneConfig& config);

/// Exact condition number of A (sigma_max/sigma_min from SVD) together with
/// the small-slope approximation 1 + sqrt(a^2 + s^2), where s = A(0,0) - 1
/// and a = A(0,1) for an upper-triangular slope affinity.
std::pair<double, double> cond_approx(const Affine2& a);

}  // namespace homkit
