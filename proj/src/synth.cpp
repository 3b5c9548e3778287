#include "homkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>

#include "homkit/metrics.hpp"
#include "homkit/robust.hpp"

namespace homkit {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kImageMarginPx = 12.0;
constexpr int kSceneRetries = 100;
constexpr int kPointRetries = 200;

Eigen::Vector3d random_unit(Rng& rng) {
  for (;;) {
    const Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
    const double n = v.norm();
    if (n > 1e-6) return v / n;
  }
}

/// Camera orientation whose optical axis points along `dir` (world -> camera
/// rotation).
Rotation3 look_at(const Eigen::Vector3d& dir) {
  const Eigen::Vector3d z = dir.normalized();
  Eigen::Vector3d up(0, 1, 0);
  if (std::abs(up.dot(z)) > 0.99) up = Eigen::Vector3d(1, 0, 0);
  const Eigen::Vector3d x = up.cross(z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return Rotation3::project(r);
}

std::optional<Eigen::Vector2d> project_visible(const Eigen::Matrix3d& k,
                                               const Eigen::Vector3d& xc,
                                               double w, double h) {
  if (xc.z() < 0.2) return std::nullopt;
  const Eigen::Vector3d q = k * (xc / xc.z());
  const Eigen::Vector2d p = q.head<2>();
  if (p.x() < kImageMarginPx || p.x() > w - kImageMarginPx ||
      p.y() < kImageMarginPx || p.y() > h - kImageMarginPx)
    return std::nullopt;
  return p;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

struct PlannedPlane {
  Plane3 plane;
  Eigen::Vector3d center;
  Eigen::Vector3d e1, e2;  // in-plane basis
};

std::optional<SceneData> try_generate(const SceneConfig& cfg, Rng& rng) {
  const double w = cfg.image_width, h = cfg.image_height;
  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  k(0, 0) = k(1, 1) = cfg.focal_px;
  k(0, 2) = w / 2.0;
  k(1, 2) = h / 2.0;

  // Plane patches in the camera-1 frame, roughly facing the camera.
  std::vector<PlannedPlane> planned;
  Eigen::Vector3d mean_center = Eigen::Vector3d::Zero();
  for (int j = 0; j < cfg.num_planes; ++j) {
    const double px = rng.uniform(0.3 * w, 0.7 * w);
    const double py = rng.uniform(0.3 * h, 0.7 * h);
    const double z0 = rng.uniform(cfg.depth_min_m, cfg.depth_max_m);
    const Eigen::Vector3d center(z0 * (px - k(0, 2)) / cfg.focal_px,
                                 z0 * (py - k(1, 2)) / cfg.focal_px, z0);
    Eigen::Vector3d n0 = -center.normalized();
    const Eigen::Vector3d axis = n0.cross(random_unit(rng));
    if (axis.norm() < 1e-6) return std::nullopt;
    const double tilt = rng.uniform(0.0, cfg.plane_tilt_max_deg * kDegToRad);
    const Eigen::Vector3d n =
        Rotation3::from_angle_axis(tilt, axis).matrix() * n0;
    const double d = -n.dot(center);
    if (std::abs(d) < 1e-9) return std::nullopt;
    PlannedPlane pp{Plane3(n, d), center, Eigen::Vector3d::Zero(),
                    Eigen::Vector3d::Zero()};
    pp.e1 = n.cross(random_unit(rng));
    if (pp.e1.norm() < 1e-6) return std::nullopt;
    pp.e1.normalize();
    pp.e2 = n.cross(pp.e1).normalized();
    planned.push_back(pp);
    mean_center += center;
  }
  mean_center /= static_cast<double>(cfg.num_planes);

  // Camera 2: mostly lateral offset, oriented at the scene with a random
  // residual rotation bounded by the configured range.
  Eigen::Vector3d dir(rng.uniform(-1.0, 1.0), 0.5 * rng.uniform(-1.0, 1.0),
                      0.3 * rng.uniform(-1.0, 1.0));
  if (dir.norm() < 1e-3) return std::nullopt;
  dir.normalize();
  const double baseline = rng.uniform(cfg.baseline_min_m, cfg.baseline_max_m);
  const Eigen::Vector3d c2 = baseline * dir;
  const double angle = rng.uniform(0.0, cfg.rotation_max_deg * kDegToRad);
  const Rotation3 r2 =
      Rotation3::from_angle_axis(angle, random_unit(rng)) * look_at(mean_center - c2);
  const Pose camera1;  // identity: the world frame is camera 1
  const Pose camera2{r2, -(r2 * c2)};
  const Pose rel = relative_pose(camera1, camera2);

  PairObservations pair;
  pair.k1 = k;
  pair.k2 = k;
  pair.epsilon_px = cfg.epsilon_px;

  struct Item {
    Correspondence c;
    int plane = -1;  // -1 for outliers
  };
  std::vector<Item> items;

  for (int j = 0; j < cfg.num_planes; ++j) {
    const PlannedPlane& pp = planned[j];
    const Homography h_norm = homography_from_plane(rel, pp.plane);
    const Homography h_px =
        Homography::from_matrix(k * h_norm.matrix() * k.inverse());
    for (int i = 0; i < cfg.points_per_plane; ++i) {
      bool placed = false;
      for (int attempt = 0; attempt < kPointRetries; ++attempt) {
        const double u = rng.uniform(-cfg.patch_radius_m, cfg.patch_radius_m);
        const double v = rng.uniform(-cfg.patch_radius_m, cfg.patch_radius_m);
        const Eigen::Vector3d x = pp.center + u * pp.e1 + v * pp.e2;
        const auto p1 = project_visible(k, x, w, h);
        const auto p2 = project_visible(k, r2 * x + camera2.translation, w, h);
        if (!p1 || !p2) continue;

        Affine2 aff;
        try {
          aff = local_affinity(h_px, *p1);
        } catch (const Error&) {
          continue;
        }
        const double det = aff.determinant();
        if (!(det > 0.0)) continue;

        Correspondence c;
        c.x1 = p1->x() + cfg.noise_px * rng.normal();
        c.y1 = p1->y() + cfg.noise_px * rng.normal();
        c.x2 = p2->x() + cfg.noise_px * rng.normal();
        c.y2 = p2->y() + cfg.noise_px * rng.normal();
        c.phi1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
        c.s1 = std::exp(rng.uniform(std::log(1.5), std::log(6.0)));
        const Eigen::Vector2d d1(std::cos(c.phi1), std::sin(c.phi1));
        const Eigen::Vector2d d2 = aff * d1;
        c.phi2 = std::atan2(d2.y(), d2.x()) +
                 rng.normal(0.0, cfg.sift_angle_noise_deg * kDegToRad);
        c.s2 = c.s1 * std::sqrt(det) * std::exp(rng.normal(0.0, cfg.sift_scale_log_noise));
        c.snn = rng.uniform(0.15, 0.5);
        c.score = clamp01(rng.normal(0.75, 0.12));
        items.push_back({c, j});
        placed = true;
        break;
      }
      if (!placed) return std::nullopt;
    }
  }

  const int total_inliers = static_cast<int>(items.size());
  const int num_outliers = static_cast<int>(std::lround(
      total_inliers * cfg.outlier_fraction / (1.0 - cfg.outlier_fraction)));
  for (int i = 0; i < num_outliers; ++i) {
    Correspondence c;
    c.x1 = rng.uniform(kImageMarginPx, w - kImageMarginPx);
    c.y1 = rng.uniform(kImageMarginPx, h - kImageMarginPx);
    c.x2 = rng.uniform(kImageMarginPx, w - kImageMarginPx);
    c.y2 = rng.uniform(kImageMarginPx, h - kImageMarginPx);
    c.phi1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    c.phi2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    c.s1 = std::exp(rng.uniform(std::log(1.5), std::log(6.0)));
    c.s2 = std::exp(rng.uniform(std::log(1.5), std::log(6.0)));
    c.snn = rng.uniform(0.55, 1.0);
    c.score = clamp01(rng.normal(0.25, 0.12));
    items.push_back({c, -1});
  }

  // Deterministic shuffle so ground-truth inliers are not grouped.
  for (int i = static_cast<int>(items.size()) - 1; i > 0; --i)
    std::swap(items[i], items[rng.index(i + 1)]);

  pair.id = "pair_" + std::to_string(cfg.seed);
  pair.rel_pose = rel;
  for (const Item& it : items) pair.corrs.push_back(it.c);

  for (int j = 0; j < cfg.num_planes; ++j) {
    const Homography h_norm = homography_from_plane(rel, planned[j].plane);
    const Homography h_px =
        Homography::from_matrix(k * h_norm.matrix() * k.inverse());
    PlaneTruth pt{planned[j].plane, h_norm, {}, {}};
    for (std::size_t i = 0; i < pair.corrs.size(); ++i) {
      const Correspondence& c = pair.corrs[i];
      if (items[i].plane == j) pt.constructed_indices.push_back(static_cast<int>(i));
      try {
        if ((c.p2() - transfer(h_px, c.p1())).norm() <= cfg.epsilon_px)
          pt.inlier_indices.push_back(static_cast<int>(i));
      } catch (const Error&) {
      }
    }
    if (static_cast<int>(pt.inlier_indices.size()) <
        std::max(10, static_cast<int>(0.75 * cfg.points_per_plane)))
      return std::nullopt;
    pair.planes.push_back(std::move(pt));
  }

  SceneData scene;
  scene.camera1 = camera1;
  scene.camera2 = camera2;
  for (const PlannedPlane& pp : planned) scene.planes.push_back(pp.plane);
  scene.pair = std::move(pair);
  scene.cases = split_test_cases(scene.pair);

  // A case is only emitted when its own ground truth survives validation;
  // weak-parallax planes whose pose is not recoverable from the noisy
  // correspondences force a fresh geometry draw.
  ValidationConfig vgate;
  vgate.epsilon_px = cfg.epsilon_px;
  for (const TestCase& tc : scene.cases)
    if (!validate_homography(tc, vgate).accepted) return std::nullopt;
  return scene;
}

}  // namespace

void SceneConfig::validate() const {
  if (image_width < 64 || image_height < 64)
    throw InvalidInput("SceneConfig: image too small");
  if (!(focal_px > 0)) throw InvalidInput("SceneConfig: focal must be positive");
  if (num_planes < 1) throw InvalidInput("SceneConfig: need at least one plane");
  if (points_per_plane < 4)
    throw InvalidInput("SceneConfig: need at least 4 points per plane");
  if (!(noise_px >= 0)) throw InvalidInput("SceneConfig: negative noise");
  if (!(outlier_fraction >= 0.0) || outlier_fraction >= 1.0)
    throw InvalidInput("SceneConfig: outlier fraction out of [0,1)");
  if (!(baseline_min_m > 0) || baseline_max_m < baseline_min_m)
    throw InvalidInput("SceneConfig: bad baseline range");
  if (!(depth_min_m > 0) || depth_max_m < depth_min_m)
    throw InvalidInput("SceneConfig: bad depth range");
  if (!(patch_radius_m > 0)) throw InvalidInput("SceneConfig: bad patch radius");
  if (!(epsilon_px > 0)) throw InvalidInput("SceneConfig: epsilon must be positive");
}

Homography TestCase::pixel_homography() const {
  return Homography::from_matrix(k2 * h_norm.matrix() * k1.inverse());
}

SceneData generate_scene(const SceneConfig& config) {
  config.validate();
  Rng rng(config.seed);
  for (int attempt = 0; attempt < kSceneRetries; ++attempt) {
    auto scene = try_generate(config, rng);
    if (scene) return std::move(*scene);
  }
  throw InfeasibleGeometry("generate_scene: no visible configuration found");
}

std::vector<TestCase> split_test_cases(const PairObservations& pair) {
  std::vector<TestCase> cases;
  const int k = static_cast<int>(pair.planes.size());
  for (int j = 0; j < k; ++j) {
    std::set<int> own(pair.planes[j].inlier_indices.begin(),
                      pair.planes[j].inlier_indices.end());
    // Exclusive inliers of other planes are removed; shared ones stay.
    std::set<int> removed;
    for (int i = 0; i < k; ++i) {
      if (i == j) continue;
      for (int idx : pair.planes[i].inlier_indices)
        if (!own.count(idx)) removed.insert(idx);
    }
    TestCase tc;
    tc.id = pair.id + "_h" + std::to_string(j);
    tc.h_norm = pair.planes[j].h_norm;
    tc.rel_pose = pair.rel_pose;
    tc.k1 = pair.k1;
    tc.k2 = pair.k2;
    tc.scale_m = pair.scale_m;
    tc.epsilon_px = pair.epsilon_px;
    std::vector<int> new_index(pair.corrs.size(), -1);
    for (std::size_t i = 0; i < pair.corrs.size(); ++i) {
      if (removed.count(static_cast<int>(i))) continue;
      new_index[i] = static_cast<int>(tc.corrs.size());
      tc.corrs.push_back(pair.corrs[i]);
    }
    for (int idx : pair.planes[j].inlier_indices)
      if (new_index[idx] >= 0) tc.inlier_indices.push_back(new_index[idx]);
    std::sort(tc.inlier_indices.begin(), tc.inlier_indices.end());
    cases.push_back(std::move(tc));
  }
  return cases;
}

ValidationResult validate_homography(const TestCase& tc,
                                     const ValidationConfig& config) {
  ValidationResult res;
  const Homography h_px = tc.pixel_homography();

  std::vector<PointPair> inliers;
  for (const Correspondence& c : tc.corrs) {
    try {
      if ((c.p2() - transfer(h_px, c.p1())).norm() <= config.epsilon_px)
        inliers.push_back({c.p1(), c.p2()});
    } catch (const Error&) {
    }
  }
  res.inlier_count = static_cast<int>(inliers.size());
  if (res.inlier_count < config.min_inliers) {
    res.failure = ValidationFailure::too_few_inliers;
    return res;
  }

  const auto h_fit = try_dlt(inliers);
  if (!h_fit) {
    res.failure = ValidationFailure::degenerate;
    return res;
  }

  // Decompose on calibrated coordinates; the fitted inliers provide the
  // cheirality reference.
  const Eigen::Matrix3d k1_inv = tc.k1.inverse();
  const Eigen::Matrix3d k2_inv = tc.k2.inverse();
  std::vector<PointPair> refs;
  refs.reserve(inliers.size());
  for (const PointPair& pp : inliers) {
    refs.push_back({(k1_inv * pp.p1.homogeneous()).hnormalized(),
                    (k2_inv * pp.p2.homogeneous()).hnormalized()});
  }
  std::vector<HomographyDecomposition> cands;
  try {
    const Homography h_cal =
        Homography::from_matrix(k2_inv * h_fit->matrix() * tc.k1);
    cands = decompose_homography(h_cal, refs);
  } catch (const Error&) {
    res.failure = ValidationFailure::degenerate;
    return res;
  }

  double best = std::numeric_limits<double>::infinity();
  res.rot_err_deg = std::numeric_limits<double>::infinity();
  res.trans_err_deg = std::numeric_limits<double>::infinity();
  const double t_gt = tc.rel_pose.translation.norm();
  for (const auto& cand : cands) {
    const double er = rotation_error_deg(tc.rel_pose.rotation, cand.rotation);
    double et = std::numeric_limits<double>::infinity();
    if (t_gt <= 1e-12) {
      // Ground truth is a pure rotation: only a translation-free candidate
      // matches it.
      if (cand.pure_rotation || cand.translation.norm() == 0.0) et = 0.0;
    } else if (!cand.pure_rotation && cand.translation.norm() > 0.0) {
      et = translation_angle_error_deg(tc.rel_pose.translation, cand.translation);
    }
    const double score = std::max(er, et);
    if (score < best) {
      best = score;
      res.rot_err_deg = er;
      res.trans_err_deg = et;
    }
  }

  if (res.rot_err_deg <= config.max_rot_err_deg &&
      res.trans_err_deg <= config.max_trans_err_deg) {
    res.accepted = true;
  } else {
    res.failure = ValidationFailure::pose_mismatch;
  }
  return res;
}

std::vector<Plane3> extract_planes(std::span<const Eigen::Vector3d> points,
                                   double threshold_m, int min_points,
                                   Rng& rng) {
  if (!(threshold_m > 0)) throw InvalidInput("extract_planes: bad threshold");
  if (min_points < 3) throw InvalidInput("extract_planes: min_points < 3");

  std::vector<int> remaining(points.size());
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<std::pair<Plane3, int>> found;

  while (static_cast<int>(remaining.size()) >= min_points) {
    const int n = static_cast<int>(remaining.size());
    std::vector<int> best_support;
    int cap = 1000;
    for (int t = 0; t < cap; ++t) {
      const auto s = sample_uniform(n, 3, rng);
      const Eigen::Vector3d& p0 = points[remaining[s[0]]];
      const Eigen::Vector3d nv =
          (points[remaining[s[1]]] - p0).cross(points[remaining[s[2]]] - p0);
      if (nv.norm() < 1e-12) continue;
      const Eigen::Vector3d nu = nv.normalized();
      const double d = -nu.dot(p0);
      std::vector<int> support;
      for (int idx : remaining)
        if (std::abs(nu.dot(points[idx]) + d) <= threshold_m)
          support.push_back(idx);
      if (support.size() > best_support.size()) {
        best_support = std::move(support);
        cap = std::min(
            cap, ransac_iterations_needed(
                     static_cast<double>(best_support.size()) / n, 3, 0.99, 1000));
      }
    }
    if (static_cast<int>(best_support.size()) < min_points) break;

    // Least-squares refit: smallest principal direction of the support.
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (int idx : best_support) centroid += points[idx];
    centroid /= static_cast<double>(best_support.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (int idx : best_support) {
      const Eigen::Vector3d q = points[idx] - centroid;
      cov += q * q.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    Eigen::Vector3d nu = eig.eigenvectors().col(0);
    double d = -nu.dot(centroid);
    std::vector<int> support;
    for (int idx : remaining)
      if (std::abs(nu.dot(points[idx]) + d) <= threshold_m) support.push_back(idx);
    if (static_cast<int>(support.size()) < min_points) break;
    if (d < 0) {
      nu = -nu;
      d = -d;
    }
    if (std::abs(d) > 1e-12)
      found.push_back({Plane3(nu, d), static_cast<int>(support.size())});

    std::set<int> used(support.begin(), support.end());
    std::vector<int> next;
    for (int idx : remaining)
      if (!used.count(idx)) next.push_back(idx);
    remaining = std::move(next);
  }

  std::stable_sort(found.begin(), found.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<Plane3> out;
  for (auto& [plane, support] : found) out.push_back(plane);
  return out;
}

Affine2 slope_affinity(const SlopedPlaneConfig& config) {
  if (!(config.z0 > 0)) throw InvalidInput("slope_affinity: z0 must be positive");
  Affine2 a;
  a << 1.0 + config.zx / config.z0, config.zy / config.z0, 0.0, 1.0;
  return a;
}

std::pair<double, double> cond_approx(const Affine2& a) {
  Eigen::JacobiSVD<Affine2> svd(a);
  const double smin = svd.singularValues()(1);
  if (!(smin > 0)) throw InvalidInput("cond_approx: singular affinity");
  const double exact = svd.singularValues()(0) / smin;
  const double s = a(0, 0) - 1.0;
  const double shear = a(0, 1);
  return {exact, 1.0 + std::hypot(shear, s)};
}

}  // namespace homkit
