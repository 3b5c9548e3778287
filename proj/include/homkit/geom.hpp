#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "homkit/errors.hpp"

namespace homkit {

/// Local linear approximation of an image-to-image map (2x2). Valid instances
/// are nonsingular; operations that require invertibility check it.
using Affine2 = Eigen::Matrix2d;

/// 3D rotation kept orthonormal with determinant +1.
class Rotation3 {
 public:
  /// Identity rotation.
  Rotation3() : m_(Eigen::Matrix3d::Identity()) {}

  /// Validates orthonormality and det +1 within 1e-9; throws InvalidInput.
  static Rotation3 from_matrix(const Eigen::Matrix3d& m);

  /// Rodrigues rotation about `axis` (need not be unit) by `angle_rad`.
  static Rotation3 from_angle_axis(double angle_rad, const Eigen::Vector3d& axis);

  /// Nearest rotation in Frobenius norm (SVD projection).
  static Rotation3 project(const Eigen::Matrix3d& m);

  const Eigen::Matrix3d& matrix() const { return m_; }

  /// Inverse rotation.
  Rotation3 transposed() const { return Rotation3(m_.transpose(), Unchecked{}); }

  friend Rotation3 operator*(const Rotation3& a, const Rotation3& b) {
    return Rotation3(a.m_ * b.m_, Unchecked{});
  }

  Eigen::Vector3d operator*(const Eigen::Vector3d& v) const { return m_ * v; }

 private:
  struct Unchecked {};
  Rotation3(const Eigen::Matrix3d& m, Unchecked) : m_(m) {}
  Eigen::Matrix3d m_;
};

/// Rigid camera pose: world point X maps to camera coordinates R*X + t.
/// Translations are metric (meters).
struct Pose {
  Rotation3 rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

/// Relative pose taking camera-1 coordinates to camera-2 coordinates:
/// R = R2*R1^T, t = t2 - R2*R1^T*t1.
Pose relative_pose(const Pose& pose1, const Pose& pose2);

/// Plane {X : normal.X + d = 0} in camera-1 coordinates. The normal is kept
/// unit length; d is in meters and must be nonzero (plane not through the
/// camera center), otherwise the induced homography is undefined.
struct Plane3 {
  Plane3(const Eigen::Vector3d& n, double d_in);

  Eigen::Vector3d normal;
  double d;
};

/// 3x3 projective map between images. Stored canonically: unit Frobenius
/// norm, sign fixed so the entry of largest magnitude is positive (first in
/// row-major order on ties). Rank 3 is required for a valid point map but is
/// not enforced at construction so that degenerate maps remain representable
/// for error handling.
class Homography {
 public:
  /// Identity map.
  Homography();

  /// Canonicalizes the given matrix. Throws InvalidInput when entries are not
  /// finite or the matrix is all zeros.
  static Homography from_matrix(const Eigen::Matrix3d& m);

  const Eigen::Matrix3d& matrix() const { return m_; }

  /// Inverse map; throws DegenerateConfiguration when rank < 3.
  Homography inverse() const;

 private:
  explicit Homography(const Eigen::Matrix3d& canonical) : m_(canonical) {}
  Eigen::Matrix3d m_;
};

/// Homography induced by a plane between two calibrated views:
/// H = R - t*n^T/d, acting on normalized (calibrated) image-1 coordinates.
Homography homography_from_plane(const Pose& relative, const Plane3& plane);

/// One feature correspondence: position, orientation (radians) and scale in
/// each image, the SIFT second-nearest-neighbour ratio, and an optional
/// learned match score (higher is better).
struct Correspondence {
  double x1 = 0, y1 = 0, phi1 = 0, s1 = 1;
  double x2 = 0, y2 = 0, phi2 = 0, s2 = 1;
  double snn = 0;
  std::optional<double> score;

  Eigen::Vector2d p1() const { return {x1, y1}; }
  Eigen::Vector2d p2() const { return {x2, y2}; }
};

/// A bare point correspondence.
struct PointPair {
  Eigen::Vector2d p1;
  Eigen::Vector2d p2;
};

/// Dehomogenized transfer H*(p,1). Throws PointAtInfinity when the
/// homogeneous weight |w| <= 1e-12.
Eigen::Vector2d transfer(const Homography& h, const Eigen::Vector2d& p);

/// Symmetric transfer error sqrt(|p2 - H(p1)|^2 + |p1 - H^-1(p2)|^2).
double sym_transfer_error(const Homography& h, const Correspondence& c);

/// One-sided reprojection error |p1 - H(p2)|; H is applied to the image-2
/// point, so pass the map that takes image-2 coordinates to image-1.
double reproj_error(const Homography& h, const Correspondence& c);

/// Direct linear transform with Hartley normalization (centroids to the
/// origin, mean distance sqrt(2) in each image). Optional per-pair weights
/// scale the pair's rows of the design matrix by sqrt(weight).
/// Throws InvalidInput (< 4 pairs, bad weights) and DegenerateConfiguration
/// (design matrix effective rank < 8 at relative tolerance 1e-9).
Homography dlt(std::span<const PointPair> pairs,
               std::span<const double> weights = {});

/// Non-throwing DLT; returns nullopt on any failure.
std::optional<Homography> try_dlt(std::span<const PointPair> pairs,
                                  std::span<const double> weights = {}) noexcept;

/// One candidate from a homography decomposition. The triple satisfies
/// H ~ R - t*n^T (the plane-distance scale is folded into t, so t is the
/// translation direction scaled by 1/d) with n the unit normal of the plane
/// {X : n.X + d = 0}. For a (near-)pure rotation, pure_rotation is set,
/// translation is zero and normal is undefined.
struct HomographyDecomposition {
  Rotation3 rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();
  bool pure_rotation = false;
};

/// SVD-based decomposition of a calibrated homography into up to four
/// candidate (R, t, n) triples. The overall sign of H is fixed by requiring
/// det > 0 (both cameras on the same side of the plane). When the spread of
/// singular values is below 1e-6 relative to the middle one, a single
/// pure-rotation sentinel is returned. Optional reference correspondences in
/// normalized coordinates prune candidates whose plane would lie behind the
/// first camera. Throws DegenerateConfiguration for rank < 3.
std::vector<HomographyDecomposition> decompose_homography(
    const Homography& h, std::span<const PointPair> reference_points = {});

/// Jacobian of the dehomogenized map p -> H(p) at p:
/// A = (1/w) * ([[h11,h12],[h21,h22]] - [u';v'] * [h31,h32]).
/// Throws PointAtInfinity when |w| <= 1e-12.
Affine2 local_affinity(const Homography& h, const Eigen::Vector2d& p);

/// Local affine map implied by a pair of SIFT frames:
/// A = Rot(phi2) * (s2/s1) * Rot(-phi1). Scales must be positive.
Affine2 affinity_from_sift(double phi1, double s1, double phi2, double s2);

}  // namespace homkit
