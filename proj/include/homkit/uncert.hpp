#pragma once

#include <map>
#include <string>
#include <vector>

#include "homkit/geom.hpp"

namespace homkit {

/// Rotation content of a nonsingular 2x2 map extracted by several routes,
/// plus the exponential-coordinate decomposition
/// A = expm(p1*I + p2*J + p3*S1 + p4*S2) with J the 90-degree rotation
/// generator and S1 = [[0,1],[1,0]], S2 = [[1,0],[0,-1]] the shear/stretch
/// generators. The exponential branch exists only when A has no eigenvalue on
/// the closed negative real axis; otherwise has_exponential is false and the
/// p fields are NaN.
struct AffineDecomposition {
  double p1 = 0;  // log scale
  double p2 = 0;  // rotation angle (radians)
  double p3 = 0;  // symmetric shear
  double p4 = 0;  // diagonal stretch
  double alpha_qr_a = 0;   // rotation of A = Q*R (R positive diagonal)
  double alpha_qr_at = 0;  // rotation of A = L*Q from QR of A^T
  double alpha_svd = 0;    // rotation U*V^T of the SVD
  double shear_sq = 0;     // p3^2 + p4^2
  double cond = 1;         // sigma_max / sigma_min
  bool has_exponential = true;
};

/// Throws InvalidInput when A is singular.
AffineDecomposition decompose_affine(const Affine2& a);

/// expm(p1*I + p2*J + p3*S1 + p4*S2); inverse of the exponential branch of
/// decompose_affine.
Affine2 affine_from_log_params(double p1, double p2, double p3, double p4);

/// Position residual of a correspondence against a reference homography:
/// sqrt((|p2 - H(p1)|^2 + |p1 - H^-1(p2)|^2) / 8).
double positional_residual(const Correspondence& c, const Homography& h);

/// Signed angle (radians) from A*d1 to d2, where d_i is the unit direction of
/// the keypoint orientation phi_i; zero when d2 is a positive multiple of A*d1.
double angular_residual_direct(const Correspondence& c, const Affine2& a);

struct ScaleStats {
  double r = 1;        // observed scale ratio s2/s1
  double r_tilde = 1;  // reference ratio sqrt(det A)
  double dr = 1;       // r / r_tilde
  double rho = 0;      // log(dr) / r_tilde
};

/// Throws InvalidInput when scales are not positive or det(A) <= 0.
ScaleStats scale_stats(const Correspondence& c, const Affine2& a);

/// All per-keypoint residuals of one correspondence against a reference
/// homography in pixel coordinates. Angles are radians.
struct KeypointResiduals {
  double eps_x = 0;
  double dalpha_direct = 0;
  double dalpha_qr_a = 0;
  double dalpha_qr_at = 0;
  double dalpha_svd = 0;
  double dalpha_exp = 0;  // NaN when the exponential branch is unavailable
  bool has_exp = true;
  double r = 1, r_tilde = 1, dr = 1, rho = 0;
  double cond = 1;
  double s1 = 1, s2 = 1;  // detector scales, kept for scale-binned statistics
};

KeypointResiduals compute_residuals(const Correspondence& c, const Homography& h);

/// Keep-side filters of the statistics accumulator.
struct StatsFilters {
  double cond_max = 1.5;
  double r_tilde_min = 0.5;
  double r_tilde_max = 2.0;

  bool operator==(const StatsFilters&) const = default;
};

struct ChannelStats {
  long long count = 0;
  double mean = 0;
  double stddev = 0;  // population
};

struct HistogramBin {
  double lo = 0, hi = 0;
  long long count = 0;
};

struct ScaleBinStats {
  double s1_lo = 0, s1_hi = 0, s2_lo = 0, s2_hi = 0;
  long long count = 0;
  double eps_x_std = 0;
};

/// Aggregated residual statistics. Angular channels are reported in degrees.
struct StatsReport {
  long long total = 0;
  long long kept = 0;
  StatsFilters filters;
  std::map<std::string, ChannelStats> channels;
  std::map<std::string, std::vector<HistogramBin>> histograms;
  std::vector<ScaleBinStats> scale_bins;
};

/// Streaming, mergeable residual accumulator. Items failing the cond or
/// r_tilde filters are counted in `total` but excluded from every statistic.
/// Histogram widths: 0.1 px for eps_x, 1 degree for angles, 0.05 for rho.
class StatsAccumulator {
 public:
  explicit StatsAccumulator(const StatsFilters& filters = {});

  void add(const KeypointResiduals& kr);

  /// Associative merge of two partial accumulations; filters must match.
  void merge(const StatsAccumulator& other);

  StatsReport report() const;

 private:
  // Welford/Chan moments: exact zero variance for constant inputs and
  // merge results independent of the partition to ~1 ulp, which the
  // sum-of-squares form cannot guarantee.
  struct Channel {
    long long count = 0;
    double mean = 0;
    double m2 = 0;
    double bin_width = 0;  // 0: no histogram
    std::map<long long, long long> bins;

    void add(double v);
    void merge(const Channel& o);
    ChannelStats stats() const;
  };

  struct Welford {
    long long count = 0;
    double sum = 0;
    double sumsq = 0;
  };

  StatsFilters filters_;
  long long total_ = 0;
  long long kept_ = 0;
  std::map<std::string, Channel> channels_;
  std::map<std::pair<long long, long long>, Welford> scale_bins_;
};

}  // namespace homkit
