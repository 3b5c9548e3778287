#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "homkit/geom.hpp"

namespace homkit {

/// Per-correspondence pixel noise (standard deviation per image, isotropic).
struct PointNoise {
  double sigma1 = 1.0;
  double sigma2 = 1.0;
};

enum class WeightSchemeKind { equal, scale };

/// `equal` leaves the supplied noise as is. `scale` multiplies each point's
/// sigma by s/m, where s is the detector scale and m the geometric mean of
/// all 2I scales, so the average weight stays 1.
struct WeightScheme {
  WeightSchemeKind kind = WeightSchemeKind::equal;
};

/// Applies a weight scheme to a base noise level.
std::vector<PointNoise> scheme_noise(std::span<const Correspondence> corrs,
                                     const WeightScheme& scheme,
                                     double base_sigma = 1.0);

/// Result of a homography fit with first-order uncertainty. The covariance
/// lives in the 8-dimensional tangent space of the unit-norm parameter vector
/// at `homography`: an 8x8 matrix over the coordinates defined by `tangent`
/// (an orthonormal basis of the orthogonal complement of vec(H)).
struct FitReport {
  Homography homography;
  Eigen::Matrix<double, 9, 8> tangent = Eigen::Matrix<double, 9, 8>::Zero();
  Eigen::Matrix<double, 8, 8> covariance = Eigen::Matrix<double, 8, 8>::Zero();
  double omega = 0.0;  // weighted sum of squared observation corrections
  int redundancy = 0;  // 2I - 8
  double variance_factor = 0.0;  // omega / redundancy
  bool variance_factor_defined = false;
  std::vector<double> residuals_px;  // per-correspondence positional residual
  int iterations = 0;
  bool converged = false;
};

/// Direct algebraic estimate: null vector of the stacked reduced epipolar-style
/// constraints x2 x (H*x1) on spherically normalized homogeneous coordinates,
/// with the first-order sandwich covariance of that estimator under the given
/// noise. omega is the noise-weighted constraint cost at the solution; the
/// variance factor is defined whenever the redundancy is positive.
/// Throws InvalidInput (< 4 correspondences, size mismatch) and
/// DegenerateConfiguration (rank < 8).
FitReport estimate_algebraic(std::span<const Correspondence> corrs,
                             std::span<const PointNoise> noise);

/// Iterated Gauss-Helmert maximum-likelihood estimate with fitted
/// observations, initialized from the algebraic solution (or from `init` when
/// given; its sign and scale do not affect the result). The weight scheme
/// scales the supplied noise per point. Converges when |dtheta| < 1e-10, at
/// most 50 iterations.
FitReport estimate_ml(std::span<const Correspondence> corrs,
                      std::span<const PointNoise> noise,
                      const WeightScheme& scheme = {},
                      const std::optional<Eigen::Matrix3d>& init = {});

/// Exact weighted correction cost of a fixed homography: per correspondence,
/// the squared Mahalanobis norm of the smallest observation correction that
/// makes the pair consistent with h, summed over all pairs. A converged ML
/// fit locally minimizes this function of h, and its omega equals the cost at
/// its homography.
double constraint_cost(std::span<const Correspondence> corrs,
                       std::span<const PointNoise> noise, const Homography& h);

struct LossMetrics {
  double l_mean = 1.0;  // sqrt(trace(S * Sref^-1) / 8)
  double l_max = 1.0;   // sqrt(lambda_max(S * Sref^-1))
};

/// Both covariances must be expressed in the same tangent basis; Sref must be
/// positive definite.
LossMetrics loss_metrics(const Eigen::Matrix<double, 8, 8>& s,
                         const Eigen::Matrix<double, 8, 8>& s_ref);

/// Covariances of the algebraic and the ML estimator evaluated at one common
/// linearization point (h, observed points) under one noise model. With a
/// shared evaluation point the Gauss-Markov inequality holds exactly, so
/// loss_metrics(algebraic, ml) >= 1.
struct CovariancePair {
  Eigen::Matrix<double, 9, 8> tangent;
  Eigen::Matrix<double, 8, 8> algebraic;
  Eigen::Matrix<double, 8, 8> ml;
};

CovariancePair covariances_at(std::span<const Correspondence> corrs,
                              std::span<const PointNoise> noise,
                              const Homography& h);

/// Accuracy loss of a weighted-least-squares estimator that assumes the wrong
/// noise: `sandwich` is the covariance of the estimator weighting with
/// `assumed` when errors actually follow `actual`; `ml` is the covariance of
/// the estimator weighting with `actual`. sandwich >= ml (Gauss-Markov).
struct MismatchedCovariances {
  Eigen::Matrix<double, 9, 8> tangent;
  Eigen::Matrix<double, 8, 8> sandwich;
  Eigen::Matrix<double, 8, 8> ml;
};

MismatchedCovariances mismatched_covariances_at(
    std::span<const Correspondence> corrs, std::span<const PointNoise> assumed,
    std::span<const PointNoise> actual, const Homography& h);

/// Symmetric root-mean-square transfer error over both directions,
/// sqrt(sum_i(|p2 - H(p1)|^2 + |p1 - H^-1(p2)|^2) / (8I)).
double rmse(std::span<const Correspondence> corrs, const Homography& h);

/// Scale-weighted variant with w_i = 1/(s1_i^2 + s2_i^2), normalized by
/// 8 * sum(w).
double rmse_weighted(std::span<const Correspondence> corrs, const Homography& h);

struct CompareFourRow {
  std::string name;
  double rmse = 0;
  double rmse_w = 0;
};

/// Side-by-side evaluation of a reference homography, the algebraic fit and
/// the two ML fits (equal and scale weighting) on the same correspondences.
struct CompareFour {
  std::vector<CompareFourRow> rows;  // reference, algebraic, ml_equal, ml_scale
  LossMetrics alg_vs_ml;             // at the ML-equal solution, equal noise
  LossMetrics equal_vs_scale;        // at the ML-scale solution, scale noise
  double sigma0_equal = 0;           // variance factor sqrt of the ML-equal fit
  double sigma0_scale = 0;
};

CompareFour compare_four(std::span<const Correspondence> corrs,
                         const Homography& reference, double base_sigma = 1.0);

}  // namespace homkit
