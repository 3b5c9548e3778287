#include "homkit/geom.hpp"

#include <cmath>
#include <numbers>

namespace homkit {

namespace {

constexpr double kRotationTol = 1e-9;
constexpr double kInfinityTol = 1e-12;
constexpr double kRankTol = 1e-9;
constexpr double kPureRotationTol = 1e-6;

Eigen::Vector2d dehomogenize(const Eigen::Vector3d& q) {
  if (std::abs(q.z()) <= kInfinityTol)
    throw PointAtInfinity("transfer: homogeneous weight is zero");
  return q.hnormalized();
}

}  // namespace

// ---------------------------------------------------------------------------
// Rotation3

Rotation3 Rotation3::from_matrix(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) throw InvalidInput("Rotation3: entries must be finite");
  const double ortho = (m.transpose() * m - Eigen::Matrix3d::Identity()).norm();
  if (ortho > kRotationTol)
    throw InvalidInput("Rotation3: matrix is not orthonormal");
  if (std::abs(m.determinant() - 1.0) > kRotationTol)
    throw InvalidInput("Rotation3: determinant must be +1");
  return Rotation3(m, Unchecked{});
}

Rotation3 Rotation3::from_angle_axis(double angle_rad, const Eigen::Vector3d& axis) {
  const double n = axis.norm();
  if (!(n > 0.0)) throw InvalidInput("Rotation3: axis must be nonzero");
  return Rotation3(Eigen::AngleAxisd(angle_rad, axis / n).toRotationMatrix(),
                   Unchecked{});
}

Rotation3 Rotation3::project(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) throw InvalidInput("Rotation3: entries must be finite");
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Eigen::Matrix3d u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return Rotation3(r, Unchecked{});
}

Pose relative_pose(const Pose& pose1, const Pose& pose2) {
  const Rotation3 r = pose2.rotation * pose1.rotation.transposed();
  return Pose{r, pose2.translation - r * pose1.translation};
}

// ---------------------------------------------------------------------------
// Plane3 / Homography

Plane3::Plane3(const Eigen::Vector3d& n, double d_in) {
  const double len = n.norm();
  if (!(len > 0.0) || !n.allFinite())
    throw InvalidInput("Plane3: normal must be a nonzero finite vector");
  if (!(std::abs(d_in) > 0.0) || !std::isfinite(d_in))
    throw InvalidInput("Plane3: d must be nonzero and finite");
  normal = n / len;
  d = d_in / len;
}

Homography::Homography() : m_(Eigen::Matrix3d::Identity() / std::sqrt(3.0)) {}

Homography Homography::from_matrix(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) throw InvalidInput("Homography: entries must be finite");
  const double norm = m.norm();
  if (!(norm > 0.0)) throw InvalidInput("Homography: matrix is zero");
  Eigen::Matrix3d c = m / norm;
  // Sign canonicalization: first entry of largest magnitude (row-major scan)
  // is made positive.
  int bi = 0, bj = 0;
  double best = -1.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (std::abs(c(i, j)) > best) {
        best = std::abs(c(i, j));
        bi = i;
        bj = j;
      }
  if (c(bi, bj) < 0.0) c = -c;
  return Homography(c);
}

Homography Homography::inverse() const {
  const double det = m_.determinant();
  if (!(std::abs(det) > 0.0))
    throw DegenerateConfiguration("Homography::inverse: rank < 3");
  return Homography::from_matrix(m_.inverse());
}

Homography homography_from_plane(const Pose& relative, const Plane3& plane) {
  const Eigen::Matrix3d h =
      relative.rotation.matrix() -
      relative.translation * plane.normal.transpose() / plane.d;
  return Homography::from_matrix(h);
}

// ---------------------------------------------------------------------------
// Transfer and residuals

Eigen::Vector2d transfer(const Homography& h, const Eigen::Vector2d& p) {
  return dehomogenize(h.matrix() * p.homogeneous());
}

double sym_transfer_error(const Homography& h, const Correspondence& c) {
  const Homography hinv = h.inverse();
  const double e12 = (c.p2() - transfer(h, c.p1())).norm();
  const double e21 = (c.p1() - transfer(hinv, c.p2())).norm();
  return std::sqrt(e12 * e12 + e21 * e21);
}

double reproj_error(const Homography& h, const Correspondence& c) {
  return (c.p1() - transfer(h, c.p2())).norm();
}

// ---------------------------------------------------------------------------
// DLT

namespace {

struct Conditioner {
  // p_hat = scale * (p - centroid)
  double scale = 1.0;
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
    t(0, 0) = t(1, 1) = scale;
    t(0, 2) = -scale * centroid.x();
    t(1, 2) = -scale * centroid.y();
    return t;
  }

  Eigen::Vector2d apply(const Eigen::Vector2d& p) const {
    return scale * (p - centroid);
  }
};

// Hartley normalization: centroid to the origin, mean distance sqrt(2).
std::optional<Conditioner> hartley(std::span<const PointPair> pairs,
                                   bool second_image) {
  Conditioner c;
  for (const PointPair& pp : pairs)
    c.centroid += second_image ? pp.p2 : pp.p1;
  c.centroid /= static_cast<double>(pairs.size());
  double mean_dist = 0.0;
  for (const PointPair& pp : pairs)
    mean_dist += ((second_image ? pp.p2 : pp.p1) - c.centroid).norm();
  mean_dist /= static_cast<double>(pairs.size());
  if (!(mean_dist > 0.0)) return std::nullopt;  // all points coincide
  c.scale = std::numbers::sqrt2 / mean_dist;
  return c;
}

std::optional<Eigen::Matrix3d> dlt_impl(std::span<const PointPair> pairs,
                                        std::span<const double> weights) {
  const auto n = pairs.size();
  const auto t1 = hartley(pairs, false);
  const auto t2 = hartley(pairs, true);
  if (!t1 || !t2) return std::nullopt;

  Eigen::MatrixXd a(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d p = t1->apply(pairs[i].p1);
    const Eigen::Vector2d q = t2->apply(pairs[i].p2);
    const double w = weights.empty() ? 1.0 : std::sqrt(weights[i]);
    const double u = p.x(), v = p.y();
    a.row(2 * i) << 0, 0, 0, -u, -v, -1, q.y() * u, q.y() * v, q.y();
    a.row(2 * i + 1) << u, v, 1, 0, 0, 0, -q.x() * u, -q.x() * v, -q.x();
    a.row(2 * i) *= w;
    a.row(2 * i + 1) *= w;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(7) <= kRankTol * sv(0)) return std::nullopt;  // effective rank < 8

  const Eigen::Matrix<double, 9, 1> hvec = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << hvec(0), hvec(1), hvec(2), hvec(3), hvec(4), hvec(5), hvec(6), hvec(7),
      hvec(8);
  const Eigen::Matrix3d h = t2->matrix().inverse() * hn * t1->matrix();
  if (!h.allFinite() || !(h.norm() > 0.0)) return std::nullopt;
  return h;
}

}  // namespace

Homography dlt(std::span<const PointPair> pairs, std::span<const double> weights) {
  if (pairs.size() < 4) throw InvalidInput("dlt: at least 4 pairs required");
  if (!weights.empty()) {
    if (weights.size() != pairs.size())
      throw InvalidInput("dlt: weight count must match pair count");
    for (double w : weights)
      if (!(w >= 0.0) || !std::isfinite(w))
        throw InvalidInput("dlt: weights must be finite and nonnegative");
  }
  const auto h = dlt_impl(pairs, weights);
  if (!h) throw DegenerateConfiguration("dlt: design matrix rank < 8");
  return Homography::from_matrix(*h);
}

std::optional<Homography> try_dlt(std::span<const PointPair> pairs,
                                  std::span<const double> weights) noexcept {
  try {
    if (pairs.size() < 4) return std::nullopt;
    if (!weights.empty() && weights.size() != pairs.size()) return std::nullopt;
    const auto h = dlt_impl(pairs, weights);
    if (!h) return std::nullopt;
    return Homography::from_matrix(*h);
  } catch (...) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Decomposition

namespace {

// Candidate for H = R + t*n^T with plane convention n.X = d > 0; converted to
// the library convention (plane n.X + d = 0, H ~ R - t*n^T) by negating n.
HomographyDecomposition make_candidate(const Eigen::Matrix3d& r,
                                       const Eigen::Vector3d& t,
                                       const Eigen::Vector3d& n) {
  HomographyDecomposition c;
  c.rotation = Rotation3::project(r);
  c.translation = t;
  c.normal = -n;
  c.pure_rotation = false;
  return c;
}

}  // namespace

std::vector<HomographyDecomposition> decompose_homography(
    const Homography& h, std::span<const PointPair> reference_points) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h.matrix(),
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  if (sv(2) <= kRankTol * sv(0))
    throw DegenerateConfiguration("decompose_homography: rank < 3");

  // Scale so the middle singular value is 1; fix the sign so det > 0, which
  // holds for any homography induced by a plane visible in both views.
  Eigen::Matrix3d hb = h.matrix() / sv(1);
  if (hb.determinant() < 0.0) hb = -hb;

  const double s1 = sv(0) / sv(1);
  const double s3 = sv(2) / sv(1);

  if (s1 - s3 < kPureRotationTol) {
    HomographyDecomposition c;
    c.rotation = Rotation3::project(hb);
    c.pure_rotation = true;
    return {c};
  }

  // Eigen-structure of Hb^T*Hb = V diag(s1^2, 1, s3^2) V^T with det V = +1.
  Eigen::JacobiSVD<Eigen::Matrix3d> svd_b(hb, Eigen::ComputeFullV);
  Eigen::Matrix3d v = svd_b.matrixV();
  if (v.determinant() < 0.0) v = -v;
  const Eigen::Vector3d v1 = v.col(0), v2 = v.col(1), v3 = v.col(2);

  const double denom = std::sqrt(s1 * s1 - s3 * s3);
  const double a1 = std::sqrt(std::max(0.0, 1.0 - s3 * s3)) / denom;
  const double b1 = std::sqrt(std::max(0.0, s1 * s1 - 1.0)) / denom;
  const Eigen::Vector3d u1 = a1 * v1 + b1 * v3;
  const Eigen::Vector3d u2 = a1 * v1 - b1 * v3;

  const auto solve = [&](const Eigen::Vector3d& u) {
    Eigen::Matrix3d big_u, big_w;
    big_u.col(0) = v2;
    big_u.col(1) = u;
    big_u.col(2) = v2.cross(u);
    big_w.col(0) = hb * v2;
    big_w.col(1) = hb * u;
    big_w.col(2) = (hb * v2).cross(hb * u);
    const Eigen::Matrix3d r = big_w * big_u.transpose();
    const Eigen::Vector3d n = v2.cross(u);
    const Eigen::Vector3d t = (hb - r) * n;
    return std::pair{r, t.eval()};
  };

  const auto [r1, t1] = solve(u1);
  const auto [r2, t2] = solve(u2);
  const Eigen::Vector3d n1 = v2.cross(u1);
  const Eigen::Vector3d n2 = v2.cross(u2);

  std::vector<HomographyDecomposition> out;
  out.push_back(make_candidate(r1, t1, n1));
  out.push_back(make_candidate(r2, t2, n2));
  out.push_back(make_candidate(r1, -t1, -n1));
  out.push_back(make_candidate(r2, -t2, -n2));

  if (!reference_points.empty()) {
    // Keep candidates whose plane lies in front of the first camera for every
    // reference point: with the internal convention n.X = d > 0 this is
    // n.x > 0, i.e. -normal.x > 0 for the stored normal.
    std::vector<HomographyDecomposition> pruned;
    for (const auto& cand : out) {
      bool front = true;
      for (const PointPair& pp : reference_points) {
        const Eigen::Vector3d x = pp.p1.homogeneous();
        if (-cand.normal.dot(x) <= 0.0) {
          front = false;
          break;
        }
      }
      if (front) pruned.push_back(cand);
    }
    if (!pruned.empty()) return pruned;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Local affinities

Affine2 local_affinity(const Homography& h, const Eigen::Vector2d& p) {
  const Eigen::Matrix3d& m = h.matrix();
  const Eigen::Vector3d q = m * p.homogeneous();
  if (std::abs(q.z()) <= kInfinityTol)
    throw PointAtInfinity("local_affinity: point maps to infinity");
  const Eigen::Vector2d tp = q.hnormalized();
  Affine2 a;
  a << m(0, 0) - tp.x() * m(2, 0), m(0, 1) - tp.x() * m(2, 1),
      m(1, 0) - tp.y() * m(2, 0), m(1, 1) - tp.y() * m(2, 1);
  return a / q.z();
}

Affine2 affinity_from_sift(double phi1, double s1, double phi2, double s2) {
  if (!(s1 > 0.0) || !(s2 > 0.0))
    throw InvalidInput("affinity_from_sift: scales must be positive");
  const double c = std::cos(phi2 - phi1), s = std::sin(phi2 - phi1);
  Affine2 a;
  a << c, -s, s, c;
  return (s2 / s1) * a;
}

}  // namespace homkit
