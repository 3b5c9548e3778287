#include "homkit/covest.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>

#include "homkit/errors.hpp"

namespace homkit {

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0, -v.z(), v.y(),  //
      v.z(), 0, -v.x(),   //
      -v.y(), v.x(), 0;
  return s;
}

// Orthonormal basis of the plane orthogonal to a unit vector.
Eigen::Matrix<double, 3, 2> tangent_basis(const Eigen::Vector3d& v) {
  int k = 0;
  v.cwiseAbs().minCoeff(&k);
  Eigen::Vector3d e = Eigen::Vector3d::Unit(k);
  Eigen::Matrix<double, 3, 2> t;
  t.col(0) = e.cross(v).normalized();
  t.col(1) = v.cross(t.col(0));
  return t;
}

// Orthonormal basis of the orthogonal complement of a unit 9-vector,
// taken from the trailing columns of a Householder QR of that vector.
Eigen::Matrix<double, 9, 8> tangent_basis9(const Eigen::Matrix<double, 9, 1>& h) {
  Eigen::HouseholderQR<Eigen::Matrix<double, 9, 1>> qr(h);
  Eigen::Matrix<double, 9, 9> q =
      qr.householderQ() * Eigen::Matrix<double, 9, 9>::Identity();
  return q.rightCols<8>();
}

Eigen::Matrix<double, 9, 1> vec9(const Eigen::Matrix3d& m) {
  return Eigen::Map<const Eigen::Matrix<double, 9, 1>>(m.data());
}

Eigen::Matrix3d unvec9(const Eigen::Matrix<double, 9, 1>& v) {
  return Eigen::Map<const Eigen::Matrix3d>(v.data());
}

// d(H*x)/d(vec H) for column-major vec: [x0*I | x1*I | x2*I].
Eigen::Matrix<double, 3, 9> d_hx_d_vech(const Eigen::Vector3d& x) {
  Eigen::Matrix<double, 3, 9> j;
  j << x.x() * Eigen::Matrix3d::Identity(), x.y() * Eigen::Matrix3d::Identity(),
      x.z() * Eigen::Matrix3d::Identity();
  return j;
}

Eigen::Vector3d spherical(const Eigen::Vector2d& p) {
  return Eigen::Vector3d(p.x(), p.y(), 1.0).normalized();
}

// Isotropic pixel noise sigma^2 * diag(1,1,0), pushed through the spherical
// normalization x -> x/|x| and expressed in the 2D tangent at the point.
Eigen::Matrix2d tangent_noise(const Eigen::Vector2d& p, double sigma,
                              const Eigen::Matrix<double, 3, 2>& basis) {
  Eigen::Vector3d xh(p.x(), p.y(), 1.0);
  double n = xh.norm();
  Eigen::Vector3d xs = xh / n;
  Eigen::Matrix3d jsph =
      (Eigen::Matrix3d::Identity() - xs * xs.transpose()) / n;
  Eigen::Matrix3d cpx = Eigen::Matrix3d::Zero();
  cpx(0, 0) = cpx(1, 1) = sigma * sigma;
  return basis.transpose() * jsph * cpx * jsph.transpose() * basis;
}

void check_input(std::span<const Correspondence> corrs,
                 std::span<const PointNoise> noise) {
  if (corrs.size() < 4)
    throw InvalidInput("covariance estimation needs at least 4 correspondences");
  if (noise.size() != corrs.size())
    throw InvalidInput("noise entries must match the correspondence count");
  for (const PointNoise& pn : noise)
    if (!(pn.sigma1 > 0) || !(pn.sigma2 > 0))
      throw InvalidInput("noise sigmas must be positive");
}

// Everything the Gauss-Helmert iteration needs per correspondence, computed
// once: spherically normalized observations, their tangent bases and the
// tangent-space noise covariances.
struct PointBlocks {
  Eigen::Vector3d xs1, xs2;          // observed unit vectors
  Eigen::Matrix<double, 3, 2> t1, t2;  // tangent bases at the observations
  Eigen::Matrix2d c1, c2;            // tangent noise covariances
};

std::vector<PointBlocks> make_blocks(std::span<const Correspondence> corrs,
                                     std::span<const PointNoise> noise) {
  std::vector<PointBlocks> blocks(corrs.size());
  for (size_t i = 0; i < corrs.size(); ++i) {
    PointBlocks& b = blocks[i];
    b.xs1 = spherical(corrs[i].p1());
    b.xs2 = spherical(corrs[i].p2());
    b.t1 = tangent_basis(b.xs1);
    b.t2 = tangent_basis(b.xs2);
    b.c1 = tangent_noise(corrs[i].p1(), noise[i].sigma1, b.t1);
    b.c2 = tangent_noise(corrs[i].p2(), noise[i].sigma2, b.t2);
  }
  return blocks;
}

// Linearization of the reduced constraint g = S(y2)^T (y2 x H*y1) at one
// correspondence: value, Jacobian wrt the 8 tangent parameters of H and the
// 2x2 Jacobians wrt the two point corrections.
struct ConstraintBlocks {
  Eigen::Vector2d g;
  Eigen::Matrix<double, 2, 8> a;
  Eigen::Matrix2d b1, b2;
};

ConstraintBlocks linearize(const Eigen::Matrix3d& hm,
                           const Eigen::Matrix<double, 9, 8>& jh,
                           const Eigen::Vector3d& y1, const Eigen::Vector3d& y2,
                           const PointBlocks& pb) {
  ConstraintBlocks cb;
  Eigen::Matrix<double, 2, 3> s = tangent_basis(y2).transpose();
  Eigen::Vector3d hy1 = hm * y1;
  cb.g = s * y2.cross(hy1);
  cb.a = s * skew(y2) * d_hx_d_vech(y1) * jh;
  cb.b1 = s * skew(y2) * hm * pb.t1;
  cb.b2 = -s * skew(hy1) * pb.t2;
  return cb;
}

std::vector<double> positional_residuals(std::span<const Correspondence> corrs,
                                         const Homography& h) {
  const Homography hinv = h.inverse();
  std::vector<double> r(corrs.size());
  for (size_t i = 0; i < corrs.size(); ++i) {
    double fwd = (corrs[i].p2() - transfer(h, corrs[i].p1())).squaredNorm();
    double bwd = (corrs[i].p1() - transfer(hinv, corrs[i].p2())).squaredNorm();
    r[i] = std::sqrt((fwd + bwd) / 8.0);
  }
  return r;
}

// Null vector of the stacked reduced constraints on the observed points.
Eigen::Matrix3d algebraic_matrix(const std::vector<PointBlocks>& blocks) {
  Eigen::MatrixXd m(2 * blocks.size(), 9);
  for (size_t i = 0; i < blocks.size(); ++i) {
    const PointBlocks& b = blocks[i];
    m.middleRows<2>(2 * i) =
        b.t2.transpose() * skew(b.xs2) * d_hx_d_vech(b.xs1);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(7) <= 1e-12 * sv(0))
    throw DegenerateConfiguration("correspondences do not determine a homography");
  return unvec9(svd.matrixV().col(8));
}

}  // namespace

std::vector<PointNoise> scheme_noise(std::span<const Correspondence> corrs,
                                     const WeightScheme& scheme,
                                     double base_sigma) {
  if (!(base_sigma > 0)) throw InvalidInput("base sigma must be positive");
  std::vector<PointNoise> noise(corrs.size(), PointNoise{base_sigma, base_sigma});
  if (scheme.kind == WeightSchemeKind::equal || corrs.empty()) return noise;
  double log_mean = 0;
  for (const Correspondence& c : corrs) {
    if (!(c.s1 > 0) || !(c.s2 > 0))
      throw InvalidInput("scale weighting needs positive detector scales");
    log_mean += std::log(c.s1) + std::log(c.s2);
  }
  const double m = std::exp(log_mean / (2.0 * corrs.size()));
  for (size_t i = 0; i < corrs.size(); ++i) {
    noise[i].sigma1 = base_sigma * corrs[i].s1 / m;
    noise[i].sigma2 = base_sigma * corrs[i].s2 / m;
  }
  return noise;
}

FitReport estimate_algebraic(std::span<const Correspondence> corrs,
                             std::span<const PointNoise> noise) {
  check_input(corrs, noise);
  std::vector<PointBlocks> blocks = make_blocks(corrs, noise);

  FitReport report;
  report.homography = Homography::from_matrix(algebraic_matrix(blocks));
  const Eigen::Matrix3d hm = report.homography.matrix();
  const Eigen::Matrix<double, 9, 1> hv = vec9(hm);
  report.tangent = tangent_basis9(hv);

  // First-order sandwich covariance: the minimizer of |M(theta)| subject to
  // |theta|=1 has tangent perturbation -(A^T A)^-1 A^T dg, so its covariance
  // is (A^T A)^-1 (sum A_i^T V_i A_i) (A^T A)^-1 with V_i the constraint
  // covariance induced by the point noise.
  Eigen::Matrix<double, 8, 8> n = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 8> avn = Eigen::Matrix<double, 8, 8>::Zero();
  double omega = 0;
  for (const PointBlocks& b : blocks) {
    ConstraintBlocks cb = linearize(hm, report.tangent, b.xs1, b.xs2, b);
    Eigen::Matrix2d v = cb.b1 * b.c1 * cb.b1.transpose() +
                        cb.b2 * b.c2 * cb.b2.transpose();
    n += cb.a.transpose() * cb.a;
    avn += cb.a.transpose() * v * cb.a;
    omega += cb.g.dot(v.inverse() * cb.g);
  }
  Eigen::Matrix<double, 8, 8> ninv =
      n.ldlt().solve(Eigen::Matrix<double, 8, 8>::Identity());
  report.covariance = ninv * avn * ninv;
  report.omega = omega;
  report.redundancy = 2 * static_cast<int>(corrs.size()) - 8;
  if (report.redundancy >= 1) {
    report.variance_factor = omega / report.redundancy;
    report.variance_factor_defined = true;
  }
  report.residuals_px = positional_residuals(corrs, report.homography);
  report.iterations = 1;
  report.converged = true;
  return report;
}

FitReport estimate_ml(std::span<const Correspondence> corrs,
                      std::span<const PointNoise> noise,
                      const WeightScheme& scheme,
                      const std::optional<Eigen::Matrix3d>& init) {
  check_input(corrs, noise);
  std::vector<PointNoise> effective(noise.begin(), noise.end());
  if (scheme.kind == WeightSchemeKind::scale) {
    std::vector<PointNoise> factors = scheme_noise(corrs, scheme, 1.0);
    for (size_t i = 0; i < effective.size(); ++i) {
      effective[i].sigma1 *= factors[i].sigma1;
      effective[i].sigma2 *= factors[i].sigma2;
    }
  }
  std::vector<PointBlocks> blocks = make_blocks(corrs, effective);

  Eigen::Matrix3d hm;
  if (init) {
    if (!init->allFinite() || !(init->norm() > 0))
      throw InvalidInput("estimate_ml: initial matrix must be finite, nonzero");
    hm = *init;
  } else {
    hm = algebraic_matrix(blocks);
  }
  hm /= hm.norm();
  const size_t count = corrs.size();
  // Total corrections of the observed points, in their tangent coordinates.
  std::vector<Eigen::Vector2d> u1(count, Eigen::Vector2d::Zero());
  std::vector<Eigen::Vector2d> u2(count, Eigen::Vector2d::Zero());
  std::vector<Eigen::Vector2d> lambda(count, Eigen::Vector2d::Zero());

  constexpr int kMaxIterations = 50;
  constexpr double kStepTol = 1e-10;
  FitReport report;
  for (int iter = 1; iter <= kMaxIterations; ++iter) {
    report.iterations = iter;
    Eigen::Matrix<double, 9, 1> hv = vec9(hm);
    Eigen::Matrix<double, 9, 8> jh = tangent_basis9(hv);

    Eigen::Matrix<double, 8, 8> n = Eigen::Matrix<double, 8, 8>::Zero();
    Eigen::Matrix<double, 8, 1> rhs = Eigen::Matrix<double, 8, 1>::Zero();
    std::vector<ConstraintBlocks> cbs(count);
    std::vector<Eigen::Matrix2d> vinv(count);
    std::vector<Eigen::Vector2d> w(count);
    for (size_t i = 0; i < count; ++i) {
      const PointBlocks& b = blocks[i];
      Eigen::Vector3d y1 = (b.xs1 + b.t1 * u1[i]).normalized();
      Eigen::Vector3d y2 = (b.xs2 + b.t2 * u2[i]).normalized();
      cbs[i] = linearize(hm, jh, y1, y2, b);
      Eigen::Matrix2d v = cbs[i].b1 * b.c1 * cbs[i].b1.transpose() +
                          cbs[i].b2 * b.c2 * cbs[i].b2.transpose();
      vinv[i] = v.inverse();
      w[i] = cbs[i].g - cbs[i].b1 * u1[i] - cbs[i].b2 * u2[i];
      n += cbs[i].a.transpose() * vinv[i] * cbs[i].a;
      rhs += cbs[i].a.transpose() * vinv[i] * w[i];
    }
    Eigen::Matrix<double, 8, 1> dtheta = -n.ldlt().solve(rhs);
    for (size_t i = 0; i < count; ++i) {
      lambda[i] = -vinv[i] * (cbs[i].a * dtheta + w[i]);
      u1[i] = blocks[i].c1 * cbs[i].b1.transpose() * lambda[i];
      u2[i] = blocks[i].c2 * cbs[i].b2.transpose() * lambda[i];
    }
    hm = unvec9((hv + jh * dtheta).normalized());
    if (dtheta.norm() < kStepTol) {
      report.converged = true;
      break;
    }
  }

  // Final linearization at the canonical-sign solution: covariance, weighted
  // residual sum and the variance factor.
  report.homography = Homography::from_matrix(hm);
  const Eigen::Matrix3d hc = report.homography.matrix();
  report.tangent = tangent_basis9(vec9(hc));
  Eigen::Matrix<double, 8, 8> n = Eigen::Matrix<double, 8, 8>::Zero();
  double omega = 0;
  for (size_t i = 0; i < count; ++i) {
    const PointBlocks& b = blocks[i];
    Eigen::Vector3d y1 = (b.xs1 + b.t1 * u1[i]).normalized();
    Eigen::Vector3d y2 = (b.xs2 + b.t2 * u2[i]).normalized();
    ConstraintBlocks cb = linearize(hc, report.tangent, y1, y2, b);
    Eigen::Matrix2d v = cb.b1 * b.c1 * cb.b1.transpose() +
                        cb.b2 * b.c2 * cb.b2.transpose();
    n += cb.a.transpose() * v.inverse() * cb.a;
    Eigen::Vector2d res = cb.g - cb.b1 * u1[i] - cb.b2 * u2[i];
    Eigen::Vector2d lam = -v.inverse() * res;  // dtheta = 0 at convergence
    omega += lam.dot(v * lam);
  }
  report.covariance = n.ldlt().solve(Eigen::Matrix<double, 8, 8>::Identity());
  report.omega = omega;
  report.redundancy = 2 * static_cast<int>(count) - 8;
  if (report.redundancy >= 1) {
    report.variance_factor = omega / report.redundancy;
    report.variance_factor_defined = true;
  }
  report.residuals_px = positional_residuals(corrs, report.homography);
  return report;
}

double constraint_cost(std::span<const Correspondence> corrs,
                       std::span<const PointNoise> noise,
                       const Homography& h) {
  check_input(corrs, noise);
  std::vector<PointBlocks> blocks = make_blocks(corrs, noise);
  const Eigen::Matrix3d hm = h.matrix();
  const Eigen::Matrix<double, 9, 8> jh = tangent_basis9(vec9(hm));
  double cost = 0;
  for (const PointBlocks& b : blocks) {
    // Smallest-correction subproblem at fixed H: iterate the correction
    // equations with dtheta = 0 until the fitted pair satisfies the
    // constraint.
    Eigen::Vector2d u1 = Eigen::Vector2d::Zero();
    Eigen::Vector2d u2 = Eigen::Vector2d::Zero();
    for (int iter = 0; iter < 50; ++iter) {
      const Eigen::Vector3d y1 = (b.xs1 + b.t1 * u1).normalized();
      const Eigen::Vector3d y2 = (b.xs2 + b.t2 * u2).normalized();
      const ConstraintBlocks cb = linearize(hm, jh, y1, y2, b);
      const Eigen::Matrix2d v = cb.b1 * b.c1 * cb.b1.transpose() +
                                cb.b2 * b.c2 * cb.b2.transpose();
      const Eigen::Vector2d w = cb.g - cb.b1 * u1 - cb.b2 * u2;
      const Eigen::Vector2d lambda = -v.inverse() * w;
      const Eigen::Vector2d n1 = b.c1 * cb.b1.transpose() * lambda;
      const Eigen::Vector2d n2 = b.c2 * cb.b2.transpose() * lambda;
      const double step = (n1 - u1).norm() + (n2 - u2).norm();
      u1 = n1;
      u2 = n2;
      if (step < 1e-13) break;
    }
    cost += u1.dot(b.c1.inverse() * u1) + u2.dot(b.c2.inverse() * u2);
  }
  return cost;
}

LossMetrics loss_metrics(const Eigen::Matrix<double, 8, 8>& s,
                         const Eigen::Matrix<double, 8, 8>& s_ref) {
  Eigen::LLT<Eigen::Matrix<double, 8, 8>> llt(s_ref);
  if (llt.info() != Eigen::Success)
    throw DegenerateConfiguration("reference covariance is not positive definite");
  // Whitened matrix L^-1 S L^-T shares its spectrum with S * Sref^-1.
  Eigen::Matrix<double, 8, 8> l = llt.matrixL();
  Eigen::Matrix<double, 8, 8> m = l.triangularView<Eigen::Lower>().solve(s);
  m = l.triangularView<Eigen::Lower>()
          .solve(Eigen::Matrix<double, 8, 8>(m.transpose()))
          .transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>> eig(
      0.5 * (m + m.transpose()));
  LossMetrics out;
  out.l_mean = std::sqrt(eig.eigenvalues().sum() / 8.0);
  out.l_max = std::sqrt(eig.eigenvalues().maxCoeff());
  return out;
}

CovariancePair covariances_at(std::span<const Correspondence> corrs,
                              std::span<const PointNoise> noise,
                              const Homography& h) {
  check_input(corrs, noise);
  std::vector<PointBlocks> blocks = make_blocks(corrs, noise);
  const Eigen::Matrix3d hm = h.matrix();
  CovariancePair out;
  out.tangent = tangent_basis9(vec9(hm));
  Eigen::Matrix<double, 8, 8> n = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 8> avn = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 8> nw = Eigen::Matrix<double, 8, 8>::Zero();
  for (const PointBlocks& b : blocks) {
    ConstraintBlocks cb = linearize(hm, out.tangent, b.xs1, b.xs2, b);
    Eigen::Matrix2d v = cb.b1 * b.c1 * cb.b1.transpose() +
                        cb.b2 * b.c2 * cb.b2.transpose();
    n += cb.a.transpose() * cb.a;
    avn += cb.a.transpose() * v * cb.a;
    nw += cb.a.transpose() * v.inverse() * cb.a;
  }
  Eigen::Matrix<double, 8, 8> ninv =
      n.ldlt().solve(Eigen::Matrix<double, 8, 8>::Identity());
  out.algebraic = ninv * avn * ninv;
  out.ml = nw.ldlt().solve(Eigen::Matrix<double, 8, 8>::Identity());
  return out;
}

MismatchedCovariances mismatched_covariances_at(
    std::span<const Correspondence> corrs, std::span<const PointNoise> assumed,
    std::span<const PointNoise> actual, const Homography& h) {
  check_input(corrs, assumed);
  check_input(corrs, actual);
  std::vector<PointBlocks> ba = make_blocks(corrs, assumed);
  std::vector<PointBlocks> bt = make_blocks(corrs, actual);
  const Eigen::Matrix3d hm = h.matrix();
  MismatchedCovariances out;
  out.tangent = tangent_basis9(vec9(hm));
  Eigen::Matrix<double, 8, 8> na = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 8> cross = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 8> nt = Eigen::Matrix<double, 8, 8>::Zero();
  for (size_t i = 0; i < corrs.size(); ++i) {
    ConstraintBlocks cb = linearize(hm, out.tangent, ba[i].xs1, ba[i].xs2, ba[i]);
    Eigen::Matrix2d va = cb.b1 * ba[i].c1 * cb.b1.transpose() +
                         cb.b2 * ba[i].c2 * cb.b2.transpose();
    Eigen::Matrix2d vt = cb.b1 * bt[i].c1 * cb.b1.transpose() +
                         cb.b2 * bt[i].c2 * cb.b2.transpose();
    Eigen::Matrix2d va_inv = va.inverse();
    na += cb.a.transpose() * va_inv * cb.a;
    cross += cb.a.transpose() * va_inv * vt * va_inv * cb.a;
    nt += cb.a.transpose() * vt.inverse() * cb.a;
  }
  Eigen::Matrix<double, 8, 8> na_inv =
      na.ldlt().solve(Eigen::Matrix<double, 8, 8>::Identity());
  out.sandwich = na_inv * cross * na_inv;
  out.ml = nt.ldlt().solve(Eigen::Matrix<double, 8, 8>::Identity());
  return out;
}

double rmse(std::span<const Correspondence> corrs, const Homography& h) {
  if (corrs.empty()) throw InvalidInput("rmse needs correspondences");
  const Homography hinv = h.inverse();
  double sum = 0;
  for (const Correspondence& c : corrs) {
    sum += (c.p2() - transfer(h, c.p1())).squaredNorm();
    sum += (c.p1() - transfer(hinv, c.p2())).squaredNorm();
  }
  return std::sqrt(sum / (8.0 * corrs.size()));
}

double rmse_weighted(std::span<const Correspondence> corrs,
                     const Homography& h) {
  if (corrs.empty()) throw InvalidInput("rmse needs correspondences");
  const Homography hinv = h.inverse();
  double sum = 0;
  double wsum = 0;
  for (const Correspondence& c : corrs) {
    if (!(c.s1 > 0) || !(c.s2 > 0))
      throw InvalidInput("weighted rmse needs positive detector scales");
    double w = 1.0 / (c.s1 * c.s1 + c.s2 * c.s2);
    sum += w * ((c.p2() - transfer(h, c.p1())).squaredNorm() +
                (c.p1() - transfer(hinv, c.p2())).squaredNorm());
    wsum += w;
  }
  return std::sqrt(sum / (8.0 * wsum));
}

CompareFour compare_four(std::span<const Correspondence> corrs,
                         const Homography& reference, double base_sigma) {
  std::vector<PointNoise> equal_noise =
      scheme_noise(corrs, WeightScheme{WeightSchemeKind::equal}, base_sigma);
  std::vector<PointNoise> scale_noise =
      scheme_noise(corrs, WeightScheme{WeightSchemeKind::scale}, base_sigma);

  FitReport alg = estimate_algebraic(corrs, equal_noise);
  FitReport ml_equal = estimate_ml(corrs, equal_noise);
  FitReport ml_scale = estimate_ml(corrs, scale_noise);

  CompareFour out;
  auto add_row = [&](const std::string& name, const Homography& h) {
    out.rows.push_back({name, rmse(corrs, h), rmse_weighted(corrs, h)});
  };
  add_row("reference", reference);
  add_row("algebraic", alg.homography);
  add_row("ml_equal", ml_equal.homography);
  add_row("ml_scale", ml_scale.homography);

  CovariancePair at_equal =
      covariances_at(corrs, equal_noise, ml_equal.homography);
  out.alg_vs_ml = loss_metrics(at_equal.algebraic, at_equal.ml);
  MismatchedCovariances at_scale = mismatched_covariances_at(
      corrs, equal_noise, scale_noise, ml_scale.homography);
  out.equal_vs_scale = loss_metrics(at_scale.sandwich, at_scale.ml);
  out.sigma0_equal =
      ml_equal.variance_factor_defined ? std::sqrt(ml_equal.variance_factor) : 0;
  out.sigma0_scale =
      ml_scale.variance_factor_defined ? std::sqrt(ml_scale.variance_factor) : 0;
  return out;
}

}  // namespace homkit
