#include "homkit/robust.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace homkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double residual_one_sided(const Eigen::Matrix3d& m, const Correspondence& c) {
  const Eigen::Vector3d q = m * c.p1().homogeneous();
  if (std::abs(q.z()) <= 1e-12) return kInf;
  return (c.p2() - q.hnormalized()).norm();
}

double residual_of(const Homography& h, const Correspondence& c, bool symmetric) {
  if (!symmetric) return residual_one_sided(h.matrix(), c);
  try {
    return sym_transfer_error(h, c);
  } catch (const Error&) {
    return kInf;
  }
}

double quality_key(const Correspondence& c) {
  // Sort key for PROSAC ordering: learned score descending when present,
  // otherwise SNN ascending.
  return c.score ? -*c.score : c.snn;
}

}  // namespace

// ---------------------------------------------------------------------------
// Prefilter

std::vector<int> prefilter_indices(std::span<const Correspondence> corrs,
                                   const Prefilter& filter) {
  std::vector<int> kept;
  const int n = static_cast<int>(corrs.size());
  switch (filter.kind) {
    case PrefilterKind::none:
      kept.resize(n);
      std::iota(kept.begin(), kept.end(), 0);
      break;
    case PrefilterKind::snn_max:
      for (int i = 0; i < n; ++i)
        if (corrs[i].snn <= filter.value) kept.push_back(i);
      break;
    case PrefilterKind::score_min:
      for (int i = 0; i < n; ++i) {
        if (!corrs[i].score)
          throw InvalidInput("prefilter: correspondence has no score");
        if (*corrs[i].score >= filter.value) kept.push_back(i);
      }
      break;
    case PrefilterKind::top_k: {
      if (filter.k < 0) throw InvalidInput("prefilter: k must be nonnegative");
      kept.resize(n);
      std::iota(kept.begin(), kept.end(), 0);
      for (int i : kept)
        if (!corrs[i].score)
          throw InvalidInput("prefilter: correspondence has no score");
      std::stable_sort(kept.begin(), kept.end(), [&](int a, int b) {
        return *corrs[a].score > *corrs[b].score;
      });
      if (static_cast<int>(kept.size()) > filter.k) kept.resize(filter.k);
      break;
    }
  }
  return kept;
}

std::vector<Correspondence> prefilter(std::span<const Correspondence> corrs,
                                      const Prefilter& filter) {
  std::vector<Correspondence> out;
  for (int i : prefilter_indices(corrs, filter)) out.push_back(corrs[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Samplers

std::vector<int> sample_uniform(int count, int sample_size, Rng& rng) {
  if (sample_size > count)
    throw InvalidInput("sample_uniform: sample larger than population");
  // Partial Fisher-Yates over an index pool.
  std::vector<int> pool(count);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<int> out(sample_size);
  for (int i = 0; i < sample_size; ++i) {
    const int j = i + rng.index(count - i);
    std::swap(pool[i], pool[j]);
    out[i] = pool[i];
  }
  return out;
}

std::vector<int> sample_prosac(int count, int sample_size, int iteration,
                               Rng& rng, int budget) {
  if (sample_size > count)
    throw InvalidInput("sample_prosac: sample larger than population");
  if (iteration < 1) throw InvalidInput("sample_prosac: iteration is 1-based");

  // Growth schedule of Chum & Matas: T_n is the expected number of draws from
  // the top-n subset among `budget` uniform samples; T'_n its integer ramp.
  const int m = sample_size;
  double t_n = budget;
  for (int i = 0; i < m; ++i)
    t_n *= static_cast<double>(m - i) / static_cast<double>(count - i);
  int n = m;
  double t_prime = 1.0;
  while (n < count && iteration > t_prime) {
    const double t_next = t_n * static_cast<double>(n + 1) / static_cast<double>(n + 1 - m);
    t_prime += std::ceil(t_next - t_n);
    t_n = t_next;
    ++n;
  }
  if (n >= count && iteration > t_prime)
    return sample_uniform(count, m, rng);  // schedule exhausted

  // The newest point plus m-1 uniform draws from the points before it.
  std::vector<int> out = sample_uniform(n - 1, m - 1, rng);
  out.push_back(n - 1);
  return out;
}

bool sample_cheirality_check(const Homography& h,
                             std::span<const Correspondence> corrs,
                             std::span<const int> sample) {
  int sign = 0;
  const Eigen::Matrix3d& m = h.matrix();
  for (int idx : sample) {
    const double w = m.row(2).dot(corrs[idx].p1().homogeneous());
    const int s = w > 0.0 ? 1 : (w < 0.0 ? -1 : 0);
    if (s == 0) return false;
    if (sign == 0) sign = s;
    if (s != sign) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Scoring

ScoreResult score(std::span<const Correspondence> corrs, const Homography& h,
                  Scorer scorer, double theta, bool symmetric) {
  ScoreResult r;
  r.mask.assign(corrs.size(), 0);
  const double theta2 = theta * theta;
  std::vector<double> sq;
  if (scorer == Scorer::lmeds) sq.reserve(corrs.size());
  int inliers = 0;
  double loss = 0.0;
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const double res = residual_of(h, corrs[i], symmetric);
    const double r2 = res * res;
    if (res <= theta) {
      r.mask[i] = 1;
      ++inliers;
    }
    loss += std::min(r2, theta2);
    if (scorer == Scorer::lmeds) sq.push_back(r2);
  }
  switch (scorer) {
    case Scorer::ransac:
      r.value = inliers;
      break;
    case Scorer::msac:
      r.value = loss;
      break;
    case Scorer::lmeds: {
      const std::size_t mid = sq.size() / 2;
      std::nth_element(sq.begin(), sq.begin() + mid, sq.end());
      r.value = sq[mid];
      break;
    }
  }
  return r;
}

bool score_better(double candidate, double incumbent, Scorer scorer) {
  if (scorer == Scorer::ransac) return candidate > incumbent;
  return candidate < incumbent;
}

int ransac_iterations_needed(double inlier_ratio, int sample_size,
                             double confidence, int max_iterations) {
  if (!(inlier_ratio >= 0.0) || inlier_ratio > 1.0)
    throw InvalidInput("ransac_iterations_needed: inlier ratio out of [0,1]");
  if (!(confidence > 0.0) || !(confidence < 1.0))
    throw InvalidInput("ransac_iterations_needed: confidence out of (0,1)");
  if (inlier_ratio == 0.0) return max_iterations;
  const double wm = std::pow(inlier_ratio, sample_size);
  if (wm >= 1.0) return 1;
  const double denom = std::log1p(-wm);
  if (!(denom < 0.0)) return max_iterations;
  const double k = std::ceil(std::log1p(-confidence) / denom);
  if (!(k < static_cast<double>(max_iterations))) return max_iterations;
  return std::max(1, static_cast<int>(k));
}

// ---------------------------------------------------------------------------
// Local optimization

std::pair<Homography, std::vector<std::uint8_t>> lo_refine(
    std::span<const Correspondence> corrs, const Homography& h, double theta,
    Scorer scorer, bool symmetric) {
  ScoreResult best = score(corrs, h, scorer, theta, symmetric);
  Homography best_h = h;

  Homography current = h;
  for (int step = 4; step >= 1; --step) {
    const double anneal = theta * static_cast<double>(step);
    std::vector<PointPair> pts;
    std::vector<double> weights;
    for (const Correspondence& c : corrs) {
      const double res = residual_of(current, c, symmetric);
      if (res <= anneal) {
        pts.push_back({c.p1(), c.p2()});
        const double t = res / anneal;
        weights.push_back(1.0 - t * t);
      }
    }
    if (pts.size() < 4) break;
    const auto refined = try_dlt(pts, weights);
    if (!refined) break;
    current = *refined;
    const ScoreResult s = score(corrs, current, scorer, theta, symmetric);
    if (score_better(s.value, best.value, scorer)) {
      best = s;
      best_h = current;
    }
  }
  return {best_h, best.mask};
}

// ---------------------------------------------------------------------------
// Two-affine-correspondence solver

std::optional<Homography> solver_two_ac(const Correspondence& a,
                                        const Correspondence& b) {
  // Condition both images: shift to the sample midpoint, scale by the mean
  // distance. A pure scaling+translation similarity transforms the local
  // affinity by s2/s1 only.
  const Correspondence* cs[2] = {&a, &b};
  Eigen::Vector2d c1 = 0.5 * (a.p1() + b.p1());
  Eigen::Vector2d c2 = 0.5 * (a.p2() + b.p2());
  const double d1 = 0.5 * ((a.p1() - c1).norm() + (b.p1() - c1).norm());
  const double d2 = 0.5 * ((a.p2() - c2).norm() + (b.p2() - c2).norm());
  if (!(d1 > 0.0) || !(d2 > 0.0)) return std::nullopt;
  const double s1 = std::numbers::sqrt2 / d1;
  const double s2 = std::numbers::sqrt2 / d2;

  Eigen::Matrix<double, 12, 9> m;
  int row = 0;
  for (const Correspondence* cp : cs) {
    const Eigen::Vector2d p = s1 * (cp->p1() - c1);
    const Eigen::Vector2d q = s2 * (cp->p2() - c2);
    Affine2 aff;
    try {
      aff = affinity_from_sift(cp->phi1, cp->s1, cp->phi2, cp->s2);
    } catch (const Error&) {
      return std::nullopt;
    }
    aff *= s2 / s1;
    const double u = p.x(), v = p.y(), up = q.x(), vp = q.y();
    // Point rows (standard DLT).
    m.row(row++) << 0, 0, 0, -u, -v, -1, vp * u, vp * v, vp;
    m.row(row++) << u, v, 1, 0, 0, 0, -up * u, -up * v, -up;
    // Affinity rows: A * (h31*u + h32*v + h33) = [[h11,h12],[h21,h22]] -
    // [up;vp]*[h31,h32], one row per entry of A.
    m.row(row++) << -1, 0, 0, 0, 0, 0, aff(0, 0) * u + up, aff(0, 0) * v, aff(0, 0);
    m.row(row++) << 0, -1, 0, 0, 0, 0, aff(0, 1) * u, aff(0, 1) * v + up, aff(0, 1);
    m.row(row++) << 0, 0, 0, -1, 0, 0, aff(1, 0) * u + vp, aff(1, 0) * v, aff(1, 0);
    m.row(row++) << 0, 0, 0, 0, -1, 0, aff(1, 1) * u, aff(1, 1) * v + vp, aff(1, 1);
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(7) <= 1e-9 * sv(0)) return std::nullopt;
  const Eigen::Matrix<double, 9, 1> hvec = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << hvec(0), hvec(1), hvec(2), hvec(3), hvec(4), hvec(5), hvec(6), hvec(7),
      hvec(8);

  Eigen::Matrix3d t1 = Eigen::Matrix3d::Identity();
  t1(0, 0) = t1(1, 1) = s1;
  t1.block<2, 1>(0, 2) = -s1 * c1;
  Eigen::Matrix3d t2 = Eigen::Matrix3d::Identity();
  t2(0, 0) = t2(1, 1) = s2;
  t2.block<2, 1>(0, 2) = -s2 * c2;
  const Eigen::Matrix3d h = t2.inverse() * hn * t1;
  if (!h.allFinite() || !(h.norm() > 0.0)) return std::nullopt;
  return Homography::from_matrix(h);
}

// ---------------------------------------------------------------------------
// Full estimator

void EstimatorConfig::validate() const {
  if (!(inlier_threshold_px > 0.0))
    throw InvalidInput("EstimatorConfig: inlier threshold must be positive");
  if (!(confidence > 0.0) || !(confidence < 1.0))
    throw InvalidInput("EstimatorConfig: confidence must lie in (0,1)");
  if (min_iterations < 1)
    throw InvalidInput("EstimatorConfig: min_iterations must be >= 1");
  if (max_iterations < min_iterations)
    throw InvalidInput("EstimatorConfig: max_iterations < min_iterations");
  if (prosac_budget < 1)
    throw InvalidInput("EstimatorConfig: prosac budget must be positive");
}

int EstimateResult::inlier_count() const {
  int n = 0;
  for (auto b : inlier_mask) n += b;
  return n;
}

namespace {

std::optional<Homography> solve_minimal(std::span<const Correspondence> corrs,
                                        std::span<const int> sample,
                                        MinimalSolver solver) {
  if (solver == MinimalSolver::two_ac)
    return solver_two_ac(corrs[sample[0]], corrs[sample[1]]);
  std::array<PointPair, 4> pts;
  for (int i = 0; i < 4; ++i)
    pts[i] = {corrs[sample[i]].p1(), corrs[sample[i]].p2()};
  return try_dlt(pts);
}

std::vector<std::uint8_t> full_mask(std::span<const Correspondence> corrs,
                                    const Homography& h, double theta,
                                    bool symmetric) {
  std::vector<std::uint8_t> mask(corrs.size(), 0);
  for (std::size_t i = 0; i < corrs.size(); ++i)
    if (residual_of(h, corrs[i], symmetric) <= theta) mask[i] = 1;
  return mask;
}

}  // namespace

EstimateResult estimate(std::span<const Correspondence> corrs,
                        const EstimatorConfig& config) {
  config.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const auto finish = [&](EstimateResult r) {
    r.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                t_start)
                      .count();
    return r;
  };

  // Stage 1: filtering. The working subset feeds hypothesis generation and
  // scoring; the final mask is still reported over the full input.
  std::vector<int> active;
  if (config.snn_threshold)
    active = prefilter_indices(corrs, Prefilter::snn_max(*config.snn_threshold));
  else
    active = prefilter_indices(corrs, Prefilter::none());
  if (config.prefilter.kind != PrefilterKind::none) {
    std::vector<Correspondence> sub;
    sub.reserve(active.size());
    for (int i : active) sub.push_back(corrs[i]);
    std::vector<int> kept = prefilter_indices(sub, config.prefilter);
    std::vector<int> remapped;
    remapped.reserve(kept.size());
    for (int i : kept) remapped.push_back(active[i]);
    active = std::move(remapped);
  }

  if (config.sampler == Sampler::prosac) {
    std::stable_sort(active.begin(), active.end(), [&](int ia, int ib) {
      return quality_key(corrs[ia]) < quality_key(corrs[ib]);
    });
  }

  std::vector<Correspondence> work;
  work.reserve(active.size());
  for (int i : active) work.push_back(corrs[i]);

  const int sample_size = config.solver == MinimalSolver::two_ac ? 2 : 4;
  const int required = config.mode == FitMode::least_squares ? 4 : sample_size;
  if (static_cast<int>(work.size()) < required) {
    EstimateResult r;
    r.inlier_mask.assign(corrs.size(), 0);
    return finish(std::move(r));
  }

  const double theta = config.inlier_threshold_px;
  const bool sym = config.symmetric_residual;

  if (config.mode == FitMode::least_squares) {
    std::vector<PointPair> pts;
    pts.reserve(work.size());
    for (const Correspondence& c : work) pts.push_back({c.p1(), c.p2()});
    const auto h = try_dlt(pts);
    EstimateResult r;
    if (h) {
      r.homography = *h;
      r.inlier_mask = full_mask(corrs, *h, theta, sym);
      r.score = score(work, *h, config.scorer, theta, sym).value;
    } else {
      r.inlier_mask.assign(corrs.size(), 0);
    }
    return finish(std::move(r));
  }

  Rng rng(config.seed);
  const int n = static_cast<int>(work.size());
  std::optional<Homography> best_h;
  double best_score = 0.0;
  int adaptive_cap = config.max_iterations;
  const bool adaptive = config.scorer != Scorer::lmeds;
  int t = 0;
  while (t < config.max_iterations &&
         (t < adaptive_cap || t < config.min_iterations)) {
    ++t;
    const std::vector<int> sample =
        config.sampler == Sampler::prosac
            ? sample_prosac(n, sample_size, t, rng, config.prosac_budget)
            : sample_uniform(n, sample_size, rng);
    const auto h = solve_minimal(work, sample, config.solver);
    if (!h) continue;
    if (!sample_cheirality_check(*h, work, sample)) continue;
    const ScoreResult s = score(work, *h, config.scorer, theta, sym);
    if (!best_h || score_better(s.value, best_score, config.scorer)) {
      best_h = *h;
      best_score = s.value;
      if (adaptive) {
        int inl = 0;
        for (auto b : s.mask) inl += b;
        const double w = static_cast<double>(inl) / static_cast<double>(n);
        adaptive_cap = ransac_iterations_needed(w, sample_size,
                                                config.confidence,
                                                config.max_iterations);
      }
    }
  }

  EstimateResult result;
  result.iterations_used = t;
  if (!best_h) {
    result.inlier_mask.assign(corrs.size(), 0);
    return finish(std::move(result));
  }

  Homography final_h = *best_h;
  double final_score = best_score;

  if (config.local_opt == LocalOpt::lo_plus) {
    const auto [lo_h, lo_mask] = lo_refine(work, final_h, theta, config.scorer, sym);
    const double lo_score = score(work, lo_h, config.scorer, theta, sym).value;
    if (!score_better(final_score, lo_score, config.scorer)) {
      final_h = lo_h;
      final_score = lo_score;
    }
  }

  // Final least-squares polish, iterated: a fit from a minimal sample rarely
  // captures the full consensus at once, so refit on the inlier set until it
  // stabilizes. Each round is kept only while the configured score does not
  // degrade.
  std::vector<std::uint8_t> consensus =
      score(work, final_h, config.scorer, theta, sym).mask;
  for (int round = 0; round < 20; ++round) {
    std::vector<PointPair> pts;
    for (std::size_t k = 0; k < work.size(); ++k)
      if (consensus[k]) pts.push_back({work[k].p1(), work[k].p2()});
    if (pts.size() < 4) break;
    const auto polished = try_dlt(pts);
    if (!polished) break;
    const ScoreResult ps = score(work, *polished, config.scorer, theta, sym);
    if (score_better(final_score, ps.value, config.scorer)) break;
    final_h = *polished;
    final_score = ps.value;
    if (ps.mask == consensus) break;
    consensus = ps.mask;
  }

  result.homography = final_h;
  result.score = final_score;
  result.inlier_mask = full_mask(corrs, final_h, theta, sym);
  return finish(std::move(result));
}

}  // namespace homkit
