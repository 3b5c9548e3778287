#include "homkit/uncert.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace homkit {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

/// Real 2x2 matrix logarithm via the eigenvalue cases of A = mu*I + W with
/// W = A - mu*I and W^2 = (det - mu^2) * (-I) ... W^2 = -(mu^2 - det)*I.
/// Returns false when A has an eigenvalue on the closed negative real axis.
bool matrix_log_2x2(const Affine2& a, Affine2& out) {
  const double mu = 0.5 * a.trace();
  const double det = a.determinant();
  const double delta = det - mu * mu;  // > 0: complex pair, < 0: real pair
  const double eps = 1e-12 * std::max(1.0, mu * mu);
  const Affine2 w = a - mu * Affine2::Identity();

  if (delta > eps) {
    // Complex pair r*exp(+-i*theta): log = log(r)*I + (theta/omega)*W.
    const double omega = std::sqrt(delta);
    const double theta = std::atan2(omega, mu);
    out = 0.5 * std::log(det) * Affine2::Identity() + (theta / omega) * w;
    return true;
  }
  if (delta < -eps) {
    const double omega = std::sqrt(-delta);
    const double l1 = mu + omega, l2 = mu - omega;
    if (!(l2 > 0.0)) return false;
    out = 0.5 * (std::log(l1) + std::log(l2)) * Affine2::Identity() +
          0.5 * (std::log(l1) - std::log(l2)) / omega * w;
    return true;
  }
  // Near-parabolic: single eigenvalue mu (possibly with a nilpotent part).
  if (!(mu > 0.0)) return false;
  out = std::log(mu) * Affine2::Identity() + w / mu;
  return true;
}

}  // namespace

AffineDecomposition decompose_affine(const Affine2& a) {
  if (!a.allFinite()) throw InvalidInput("decompose_affine: entries must be finite");
  if (!(std::abs(a.determinant()) > 0.0))
    throw InvalidInput("decompose_affine: singular matrix");

  AffineDecomposition d;

  {
    Eigen::HouseholderQR<Affine2> qr(a);
    Affine2 q = qr.householderQ();
    const Affine2 r = qr.matrixQR().triangularView<Eigen::Upper>();
    if (r(0, 0) < 0) q.col(0) *= -1;
    if (r(1, 1) < 0) q.col(1) *= -1;
    d.alpha_qr_a = std::atan2(q(1, 0), q(0, 0));
  }
  {
    const Affine2 at = a.transpose();
    Eigen::HouseholderQR<Affine2> qr(at);
    Affine2 q = qr.householderQ();
    const Affine2 r = qr.matrixQR().triangularView<Eigen::Upper>();
    if (r(0, 0) < 0) q.col(0) *= -1;
    if (r(1, 1) < 0) q.col(1) *= -1;
    // A = R^T * Q^T: the rotation factor is Q^T.
    d.alpha_qr_at = std::atan2(q(0, 1), q(0, 0));
  }
  {
    Eigen::JacobiSVD<Affine2> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Affine2 r = svd.matrixU() * svd.matrixV().transpose();
    d.alpha_svd = std::atan2(r(1, 0), r(0, 0));
    d.cond = svd.singularValues()(0) / svd.singularValues()(1);
  }

  Affine2 b;
  if (matrix_log_2x2(a, b)) {
    d.p1 = 0.5 * (b(0, 0) + b(1, 1));
    d.p2 = 0.5 * (b(1, 0) - b(0, 1));
    d.p3 = 0.5 * (b(1, 0) + b(0, 1));
    d.p4 = 0.5 * (b(0, 0) - b(1, 1));
    d.shear_sq = d.p3 * d.p3 + d.p4 * d.p4;
    d.has_exponential = true;
  } else {
    d.p1 = d.p2 = d.p3 = d.p4 = kNan;
    d.shear_sq = kNan;
    d.has_exponential = false;
  }
  return d;
}

Affine2 affine_from_log_params(double p1, double p2, double p3, double p4) {
  Affine2 c;
  c << p4, p3 - p2, p3 + p2, -p4;
  // c*c = delta * I with delta = p3^2 + p4^2 - p2^2.
  const double delta = p3 * p3 + p4 * p4 - p2 * p2;
  Affine2 e;
  if (delta > 1e-300) {
    const double s = std::sqrt(delta);
    e = std::cosh(s) * Affine2::Identity() + std::sinh(s) / s * c;
  } else if (delta < -1e-300) {
    const double s = std::sqrt(-delta);
    e = std::cos(s) * Affine2::Identity() + std::sin(s) / s * c;
  } else {
    e = Affine2::Identity() + c;
  }
  return std::exp(p1) * e;
}

double positional_residual(const Correspondence& c, const Homography& h) {
  const Homography hinv = h.inverse();
  const double e12 = (c.p2() - transfer(h, c.p1())).squaredNorm();
  const double e21 = (c.p1() - transfer(hinv, c.p2())).squaredNorm();
  return std::sqrt((e12 + e21) / 8.0);
}

double angular_residual_direct(const Correspondence& c, const Affine2& a) {
  const Eigen::Vector2d d1(std::cos(c.phi1), std::sin(c.phi1));
  const Eigen::Vector2d d2(std::cos(c.phi2), std::sin(c.phi2));
  const Eigen::Vector2d ad = a * d1;
  if (!(ad.norm() > 0.0))
    throw InvalidInput("angular_residual_direct: A*d vanished");
  return std::atan2(ad.x() * d2.y() - ad.y() * d2.x(), ad.dot(d2));
}

ScaleStats scale_stats(const Correspondence& c, const Affine2& a) {
  if (!(c.s1 > 0) || !(c.s2 > 0))
    throw InvalidInput("scale_stats: scales must be positive");
  const double det = a.determinant();
  if (!(det > 0.0))
    throw InvalidInput("scale_stats: affinity must be orientation-preserving");
  ScaleStats s;
  s.r = c.s2 / c.s1;
  s.r_tilde = std::sqrt(det);
  s.dr = s.r / s.r_tilde;
  s.rho = std::log(s.dr) / s.r_tilde;
  return s;
}

KeypointResiduals compute_residuals(const Correspondence& c, const Homography& h) {
  KeypointResiduals kr;
  kr.eps_x = positional_residual(c, h);
  const Affine2 a = local_affinity(h, c.p1());
  const AffineDecomposition d = decompose_affine(a);
  const double alpha_obs = wrap_angle(c.phi2 - c.phi1);
  kr.dalpha_direct = angular_residual_direct(c, a);
  kr.dalpha_qr_a = wrap_angle(alpha_obs - d.alpha_qr_a);
  kr.dalpha_qr_at = wrap_angle(alpha_obs - d.alpha_qr_at);
  kr.dalpha_svd = wrap_angle(alpha_obs - d.alpha_svd);
  kr.has_exp = d.has_exponential;
  kr.dalpha_exp = d.has_exponential ? wrap_angle(alpha_obs - d.p2) : kNan;
  const ScaleStats ss = scale_stats(c, a);
  kr.r = ss.r;
  kr.r_tilde = ss.r_tilde;
  kr.dr = ss.dr;
  kr.rho = ss.rho;
  kr.cond = d.cond;
  kr.s1 = c.s1;
  kr.s2 = c.s2;
  return kr;
}

// ---------------------------------------------------------------------------
// Accumulator

void StatsAccumulator::Channel::add(double v) {
  ++count;
  const double delta = v - mean;
  mean += delta / static_cast<double>(count);
  m2 += delta * (v - mean);
  if (bin_width > 0)
    ++bins[static_cast<long long>(std::floor(v / bin_width))];
}

void StatsAccumulator::Channel::merge(const Channel& o) {
  if (o.count == 0) return;
  if (count == 0) {
    count = o.count;
    mean = o.mean;
    m2 = o.m2;
  } else {
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(o.count);
    const double delta = o.mean - mean;
    count += o.count;
    mean += delta * nb / (na + nb);
    m2 += o.m2 + delta * delta * na * nb / (na + nb);
  }
  for (const auto& [k, v] : o.bins) bins[k] += v;
}

ChannelStats StatsAccumulator::Channel::stats() const {
  ChannelStats s;
  s.count = count;
  if (count > 0) {
    s.mean = mean;
    s.stddev = std::sqrt(std::max(0.0, m2 / static_cast<double>(count)));
  }
  return s;
}

StatsAccumulator::StatsAccumulator(const StatsFilters& filters)
    : filters_(filters) {
  channels_["eps_x"].bin_width = 0.1;
  channels_["dalpha_direct_deg"].bin_width = 1.0;
  channels_["dalpha_qr_a_deg"].bin_width = 1.0;
  channels_["dalpha_qr_at_deg"].bin_width = 1.0;
  channels_["dalpha_svd_deg"].bin_width = 1.0;
  channels_["dalpha_exp_deg"].bin_width = 1.0;
  channels_["rho"].bin_width = 0.05;
  channels_["log_dr"].bin_width = 0.05;
  channels_["dr"].bin_width = 0;
  channels_["cond"].bin_width = 0;
}

void StatsAccumulator::add(const KeypointResiduals& kr) {
  ++total_;
  if (kr.cond > filters_.cond_max) return;
  if (kr.r_tilde < filters_.r_tilde_min || kr.r_tilde > filters_.r_tilde_max)
    return;
  ++kept_;
  channels_["eps_x"].add(kr.eps_x);
  channels_["dalpha_direct_deg"].add(kr.dalpha_direct * kRadToDeg);
  channels_["dalpha_qr_a_deg"].add(kr.dalpha_qr_a * kRadToDeg);
  channels_["dalpha_qr_at_deg"].add(kr.dalpha_qr_at * kRadToDeg);
  channels_["dalpha_svd_deg"].add(kr.dalpha_svd * kRadToDeg);
  if (kr.has_exp) channels_["dalpha_exp_deg"].add(kr.dalpha_exp * kRadToDeg);
  channels_["rho"].add(kr.rho);
  if (kr.dr > 0) channels_["log_dr"].add(std::log(kr.dr));
  channels_["dr"].add(kr.dr);
  channels_["cond"].add(kr.cond);

  auto& wf = scale_bins_[{static_cast<long long>(std::floor(kr.s1)),
                          static_cast<long long>(std::floor(kr.s2))}];
  ++wf.count;
  wf.sum += kr.eps_x;
  wf.sumsq += kr.eps_x * kr.eps_x;
}

void StatsAccumulator::merge(const StatsAccumulator& other) {
  if (!(filters_ == other.filters_))
    throw InvalidInput("StatsAccumulator::merge: filters differ");
  total_ += other.total_;
  kept_ += other.kept_;
  for (const auto& [name, ch] : other.channels_) channels_[name].merge(ch);
  for (const auto& [key, wf] : other.scale_bins_) {
    auto& mine = scale_bins_[key];
    mine.count += wf.count;
    mine.sum += wf.sum;
    mine.sumsq += wf.sumsq;
  }
}

StatsReport StatsAccumulator::report() const {
  StatsReport r;
  r.total = total_;
  r.kept = kept_;
  r.filters = filters_;
  for (const auto& [name, ch] : channels_) {
    r.channels[name] = ch.stats();
    if (ch.bin_width > 0) {
      std::vector<HistogramBin>& hist = r.histograms[name];
      for (const auto& [idx, count] : ch.bins)
        hist.push_back({idx * ch.bin_width, (idx + 1) * ch.bin_width, count});
    }
  }
  for (const auto& [key, wf] : scale_bins_) {
    ScaleBinStats sb;
    sb.s1_lo = static_cast<double>(key.first);
    sb.s1_hi = sb.s1_lo + 1.0;
    sb.s2_lo = static_cast<double>(key.second);
    sb.s2_hi = sb.s2_lo + 1.0;
    sb.count = wf.count;
    const double mean = wf.sum / static_cast<double>(wf.count);
    sb.eps_x_std = std::sqrt(
        std::max(0.0, wf.sumsq / static_cast<double>(wf.count) - mean * mean));
    r.scale_bins.push_back(sb);
  }
  return r;
}

}  // namespace homkit
