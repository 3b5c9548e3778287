#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <doctest.h>

#include "homkit/dataset.hpp"
#include "homkit/errors.hpp"
#include "homkit/synth.hpp"
#include "homkit/uncert.hpp"
#include "test_util.hpp"

using namespace homkit;
using namespace homkit::testutil;

namespace {

double one_sided_residual(const Correspondence& c, const Homography& h) {
  return (c.p2() - transfer(h, c.p1())).norm();
}

int total_constructed(const PairObservations& pair) {
  int n = 0;
  for (const PlaneTruth& pt : pair.planes)
    n += static_cast<int>(pt.constructed_indices.size());
  return n;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("scene config validation") {
  SceneConfig c;
  CHECK_NOTHROW(c.validate());
  c.noise_px = -0.1;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.outlier_fraction = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.outlier_fraction = -0.2;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.num_planes = 0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.points_per_plane = 3;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.focal_px = 0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.depth_min_m = 5.0;
  c.depth_max_m = 4.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.epsilon_px = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("generated scenes are deterministic in the seed") {
  SceneConfig c;
  c.num_planes = 2;
  c.points_per_plane = 30;
  c.seed = 42;
  const SceneData a = generate_scene(c);
  const SceneData b = generate_scene(c);
  REQUIRE(a.cases.size() == b.cases.size());
  for (size_t i = 0; i < a.cases.size(); ++i)
    CHECK(test_case_to_json(a.cases[i]) == test_case_to_json(b.cases[i]));

  c.seed = 43;
  const SceneData other = generate_scene(c);
  CHECK(test_case_to_json(a.cases[0]) != test_case_to_json(other.cases[0]));
}

TEST_CASE("generated cases satisfy their own ground truth") {
  SceneConfig c;
  c.num_planes = 2;
  c.points_per_plane = 40;
  c.noise_px = 1.0;
  c.outlier_fraction = 0.3;
  c.seed = 7;
  const SceneData scene = generate_scene(c);
  REQUIRE(scene.cases.size() == 2);

  for (const TestCase& tc : scene.cases) {
    const Homography h = tc.pixel_homography();
    CHECK(std::is_sorted(tc.inlier_indices.begin(), tc.inlier_indices.end()));
    std::set<int> listed(tc.inlier_indices.begin(), tc.inlier_indices.end());
    for (size_t i = 0; i < tc.corrs.size(); ++i) {
      double res = std::numeric_limits<double>::infinity();
      try {
        res = one_sided_residual(tc.corrs[i], h);
      } catch (const PointAtInfinity&) {
      }
      // The inlier list is exactly the epsilon gate.
      if (listed.count(static_cast<int>(i)))
        CHECK(res <= tc.epsilon_px + 1e-9);
      else
        CHECK(res > tc.epsilon_px - 1e-9);
    }
    CHECK(tc.inlier_indices.size() >= 10);
  }

  // Each plane keeps at least the per-plane construction minimum.
  for (const PlaneTruth& pt : scene.pair.planes)
    CHECK(static_cast<int>(pt.constructed_indices.size()) >=
          std::max(10, static_cast<int>(0.75 * c.points_per_plane)));
}

TEST_CASE("outlier counts follow the configured fraction") {
  SceneConfig c;
  c.num_planes = 1;
  c.points_per_plane = 100;
  c.outlier_fraction = 0.5;
  c.noise_px = 1.0;
  c.seed = 11;
  const SceneData scene = generate_scene(c);
  const int inl = total_constructed(scene.pair);
  const int outl = static_cast<int>(scene.pair.corrs.size()) - inl;
  CHECK(inl >= 75);
  // fraction 0.5 means as many outliers as inliers.
  CHECK(outl == inl);

  SceneConfig none = c;
  none.outlier_fraction = 0.0;
  const SceneData clean = generate_scene(none);
  CHECK(static_cast<int>(clean.pair.corrs.size()) ==
        total_constructed(clean.pair));
}

TEST_CASE("zero pixel noise gives exact correspondences") {
  SceneConfig c;
  c.num_planes = 1;
  c.points_per_plane = 50;
  c.noise_px = 0.0;
  c.outlier_fraction = 0.0;
  c.seed = 3;
  const SceneData scene = generate_scene(c);
  const TestCase& tc = scene.cases.at(0);
  const Homography h = tc.pixel_homography();
  for (const Correspondence& corr : tc.corrs)
    CHECK(one_sided_residual(corr, h) < 1e-8);
}

TEST_CASE("pixel noise level shows up in the residuals") {
  SceneConfig c;
  c.num_planes = 1;
  c.points_per_plane = 3000;
  c.noise_px = 1.0;
  c.outlier_fraction = 0.0;
  c.epsilon_px = 50.0;  // keep every constructed point an inlier
  c.seed = 13;
  const SceneData scene = generate_scene(c);
  const TestCase& tc = scene.cases.at(0);
  const Homography h = tc.pixel_homography();
  double sum = 0, sumsq = 0;
  int n = 0;
  for (const Correspondence& corr : tc.corrs) {
    const double rx = corr.x2 - transfer(h, corr.p1()).x();
    sum += rx;
    sumsq += rx * rx;
    ++n;
  }
  const double mean = sum / n;
  const double stddev = std::sqrt(sumsq / n - mean * mean);
  // Residual x-component mixes both images' noise through the local map.
  CHECK(std::abs(mean) < 0.15);
  CHECK(stddev > 1.0);
  CHECK(stddev < 1.9);
}

TEST_CASE("synthesized feature attributes match their distributions") {
  SceneConfig c;
  c.num_planes = 1;
  c.points_per_plane = 2000;
  c.noise_px = 0.0;
  c.outlier_fraction = 0.25;
  c.sift_angle_noise_deg = 12.0;
  c.sift_scale_log_noise = 0.2;
  c.seed = 17;
  const SceneData scene = generate_scene(c);
  const PairObservations& pair = scene.pair;
  const Homography h = Homography::from_matrix(
      pair.k2 * pair.planes[0].h_norm.matrix() * pair.k1.inverse());

  std::set<int> constructed(pair.planes[0].constructed_indices.begin(),
                            pair.planes[0].constructed_indices.end());
  double asum = 0, asumsq = 0, lsum = 0, lsumsq = 0;
  int n = 0;
  for (int idx : pair.planes[0].constructed_indices) {
    const Correspondence& corr = pair.corrs[idx];
    CHECK(corr.s1 >= 1.5);
    CHECK(corr.s1 < 6.0);
    CHECK(corr.snn >= 0.15);
    CHECK(corr.snn <= 0.5);
    const Affine2 a = local_affinity(h, corr.p1());
    const double da = angular_residual_direct(corr, a);
    const double ldr = std::log(scale_stats(corr, a).dr);
    asum += da;
    asumsq += da * da;
    lsum += ldr;
    lsumsq += ldr * ldr;
    ++n;
  }
  REQUIRE(n >= 1500);
  const double astd =
      std::sqrt(asumsq / n - (asum / n) * (asum / n)) * 180.0 / kPi;
  const double lstd = std::sqrt(lsumsq / n - (lsum / n) * (lsum / n));
  CHECK(astd > 10.8);
  CHECK(astd < 13.2);
  CHECK(lstd > 0.18);
  CHECK(lstd < 0.22);

  int outliers = 0;
  for (size_t i = 0; i < pair.corrs.size(); ++i) {
    if (constructed.count(static_cast<int>(i))) continue;
    ++outliers;
    CHECK(pair.corrs[i].snn >= 0.55);
    CHECK(pair.corrs[i].snn <= 1.0);
  }
  CHECK(outliers > 0);
}

TEST_CASE("splitting a multi-plane pair keeps shared points everywhere") {
  // Two planes meeting in the line {x = 0, z = 2}, camera 1 at the origin.
  const Plane3 plane_a(Eigen::Vector3d(0, 0, -1), 2.0);
  const Plane3 plane_b(Eigen::Vector3d(-0.3, 0, -1), 2.0);
  Rng rng(19);
  Pose rel;
  rel.rotation = random_rotation(rng, 5 * kDeg);
  rel.translation = Eigen::Vector3d(0.2, -0.1, 0.05);

  PairObservations pair;
  pair.id = "pair_x";
  pair.rel_pose = rel;
  pair.epsilon_px = 1e-4;  // identity intrinsics: tolerances in normalized units

  auto project = [&](const Eigen::Vector3d& x) {
    const Eigen::Vector3d y = rel.rotation * x + rel.translation;
    Correspondence c;
    c.x1 = x.x() / x.z();
    c.y1 = x.y() / x.z();
    c.x2 = y.x() / y.z();
    c.y2 = y.y() / y.z();
    c.snn = 0.2;
    return c;
  };
  // 0..2 exclusive to plane A (z = 2, x != 0).
  for (double x : {-0.5, 0.4, 0.7})
    pair.corrs.push_back(project({x, 0.1 * x, 2.0}));
  // 3..5 exclusive to plane B (z = 2 - 0.3 x, x != 0).
  for (double x : {-0.6, 0.5, 0.8})
    pair.corrs.push_back(project({x, -0.1 * x, 2.0 - 0.3 * x}));
  // 6: on the intersection line, inlier of both planes.
  pair.corrs.push_back(project({0.0, 0.15, 2.0}));
  // 7: an outlier matching nothing.
  Correspondence out = project({0.3, 0.3, 2.0});
  out.x2 += 0.5;
  pair.corrs.push_back(out);

  PlaneTruth ta{plane_a, homography_from_plane(rel, plane_a), {0, 1, 2, 6},
                {0, 1, 2, 6}};
  PlaneTruth tb{plane_b, homography_from_plane(rel, plane_b), {3, 4, 5, 6},
                {3, 4, 5}};
  pair.planes = {ta, tb};

  const std::vector<TestCase> cases = split_test_cases(pair);
  REQUIRE(cases.size() == 2);
  CHECK(cases[0].id == "pair_x_h0");
  CHECK(cases[1].id == "pair_x_h1");
  CHECK(cases[0].split == "test");

  // Case 0 drops the exclusive inliers of plane B (3, 4, 5).
  REQUIRE(cases[0].corrs.size() == 5);
  CHECK(cases[0].inlier_indices == std::vector<int>{0, 1, 2, 3});
  // The shared point and the outlier survive in both cases.
  CHECK(cases[0].corrs[3].y1 == doctest::Approx(0.15 / 2.0).epsilon(1e-12));
  CHECK(cases[0].corrs[4].x2 == doctest::Approx(out.x2).epsilon(1e-12));

  REQUIRE(cases[1].corrs.size() == 5);
  CHECK(cases[1].inlier_indices == std::vector<int>{0, 1, 2, 3});
  CHECK(cases[1].h_norm.matrix() == tb.h_norm.matrix());

  // Every listed inlier actually satisfies its plane's map.
  for (const TestCase& tc : cases)
    for (int idx : tc.inlier_indices)
      CHECK(one_sided_residual(tc.corrs[idx], tc.h_norm) < 1e-9);
}

TEST_CASE("validation accepts clean generated scenes") {
  SceneConfig c;
  c.num_planes = 2;
  c.points_per_plane = 50;
  c.noise_px = 1.0;
  c.outlier_fraction = 0.3;
  c.seed = 23;
  const SceneData scene = generate_scene(c);
  ValidationConfig vc;
  for (const TestCase& tc : scene.cases) {
    const ValidationResult res = validate_homography(tc, vc);
    CHECK(res.accepted);
    CHECK(res.failure == ValidationFailure::none);
    CHECK(res.inlier_count >= vc.min_inliers);
    CHECK(res.rot_err_deg < vc.max_rot_err_deg);
    CHECK(res.trans_err_deg < vc.max_trans_err_deg);
  }
}

TEST_CASE("validation rejects tampered ground truth") {
  SceneConfig c;
  c.num_planes = 1;
  c.points_per_plane = 60;
  c.noise_px = 0.5;
  c.outlier_fraction = 0.0;
  c.seed = 29;
  const SceneData scene = generate_scene(c);
  TestCase tc = scene.cases.at(0);
  ValidationConfig vc;

  SUBCASE("rotated relative pose mismatches") {
    tc.rel_pose.rotation = tc.rel_pose.rotation * rot_z(10 * kDeg);
    const ValidationResult res = validate_homography(tc, vc);
    CHECK_FALSE(res.accepted);
    CHECK(res.failure == ValidationFailure::pose_mismatch);
    CHECK(res.rot_err_deg > 3.0);
  }

  SUBCASE("tiny tolerance starves the inlier count") {
    ValidationConfig strict = vc;
    strict.epsilon_px = 1e-9;
    const ValidationResult res = validate_homography(tc, strict);
    CHECK_FALSE(res.accepted);
    CHECK(res.failure == ValidationFailure::too_few_inliers);
  }

  SUBCASE("collinear support is degenerate") {
    const Homography h = tc.pixel_homography();
    tc.corrs.clear();
    tc.inlier_indices.clear();
    for (int i = 0; i < 15; ++i) {
      Correspondence corr;
      corr.x1 = 300 + 20 * i;
      corr.y1 = 0.5 * corr.x1 + 10;
      const Eigen::Vector2d p2 = transfer(h, corr.p1());
      corr.x2 = p2.x();
      corr.y2 = p2.y();
      corr.snn = 0.2;
      tc.corrs.push_back(corr);
      tc.inlier_indices.push_back(i);
    }
    const ValidationResult res = validate_homography(tc, vc);
    CHECK_FALSE(res.accepted);
    CHECK(res.failure == ValidationFailure::degenerate);
  }
}

TEST_CASE("validation handles a pure-rotation pair") {
  const Rotation3 r = rot_z(3 * kDeg) * rot_x(-2 * kDeg);
  const Eigen::Matrix3d k = default_k();
  TestCase tc;
  tc.id = "rot_only";
  tc.rel_pose.rotation = r;
  tc.rel_pose.translation = Eigen::Vector3d::Zero();
  tc.h_norm = Homography::from_matrix(r.matrix());
  tc.k1 = k;
  tc.k2 = k;
  tc.epsilon_px = 3.0;
  const Homography h_px = tc.pixel_homography();
  Rng rng(31);
  for (int i = 0; i < 30; ++i) {
    Correspondence c;
    c.x1 = rng.uniform(100, 900);
    c.y1 = rng.uniform(100, 700);
    const Eigen::Vector2d p2 = transfer(h_px, c.p1());
    c.x2 = p2.x();
    c.y2 = p2.y();
    c.snn = 0.2;
    tc.corrs.push_back(c);
    tc.inlier_indices.push_back(i);
  }
  const ValidationResult res = validate_homography(tc, ValidationConfig{});
  CHECK(res.accepted);
  CHECK(res.rot_err_deg < 1e-6);
  CHECK(res.trans_err_deg == 0.0);
}

TEST_CASE("plane extraction recovers a two-plane cloud") {
  Rng rng(37);
  std::vector<Eigen::Vector3d> cloud;
  for (int i = 0; i < 60; ++i)
    cloud.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), 2.0);
  for (int i = 0; i < 40; ++i)
    cloud.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), 4.0);
  for (int i = 0; i < 20; ++i)
    cloud.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1),
                       rng.uniform(0.0, 6.0));

  Rng fit_rng(1);
  const std::vector<Plane3> planes =
      extract_planes(cloud, 0.05, 30, fit_rng);
  REQUIRE(planes.size() == 2);
  for (const Plane3& p : planes) {
    CHECK(p.d > 0);
    CHECK(std::abs(std::abs(p.normal.z()) - 1.0) < 1e-3);
  }
  // Strongest support first: the z = 2 plane has 60 members.
  CHECK(planes[0].d == doctest::Approx(2.0).epsilon(1e-2));
  CHECK(planes[1].d == doctest::Approx(4.0).epsilon(1e-2));
  // Members satisfy the plane equation within the threshold.
  int near_first = 0;
  for (const Eigen::Vector3d& x : cloud)
    if (std::abs(planes[0].normal.dot(x) + planes[0].d) <= 0.05) ++near_first;
  CHECK(near_first >= 60);
}

TEST_CASE("slope affinity closed form") {
  SlopedPlaneConfig cfg;
  cfg.z0 = 2.0;
  cfg.zx = 0.1;
  cfg.zy = 0.05;
  const Affine2 a = slope_affinity(cfg);
  CHECK(a(0, 0) == doctest::Approx(1.05).epsilon(1e-12));
  CHECK(a(0, 1) == doctest::Approx(0.025).epsilon(1e-12));
  CHECK(a(1, 0) == 0.0);
  CHECK(a(1, 1) == 1.0);
}

TEST_CASE("condition number approximation on a known matrix") {
  Affine2 a;
  a << 1.0, 0.1, 0.0, 1.0;
  const auto [exact, approx] = cond_approx(a);
  // Closed form for det = 1: cond is the large eigenvalue of A^T A.
  const double expect = (2.01 + std::sqrt(2.01 * 2.01 - 4.0)) / 2.0;
  CHECK(exact == doctest::Approx(expect).epsilon(1e-9));
  CHECK(approx == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(std::abs(exact - approx) <= 0.1 * 0.1);

  // The identity is exactly conditioned.
  const auto [e1, a1] = cond_approx(Affine2::Identity());
  CHECK(e1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a1 == doctest::Approx(1.0).epsilon(1e-12));
}

}  // TEST_SUITE("synth")
