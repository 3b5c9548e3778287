#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "homkit/errors.hpp"
#include "homkit/metrics.hpp"
#include "test_util.hpp"

using namespace homkit;
using namespace homkit::testutil;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_SUITE("metrics") {

TEST_CASE("rotation error on known rotations") {
  const Rotation3 id;
  CHECK(rotation_error_deg(id, id) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rotation_error_deg(id, rot_z(5 * kDeg)) ==
        doctest::Approx(5.0).epsilon(1e-9));
  CHECK(rotation_error_deg(rot_x(0.5), rot_x(0.5)) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rotation_error_deg(id, rot_z(kPi)) ==
        doctest::Approx(180.0).epsilon(1e-9));
  // Invariant to which argument is the reference.
  Rng rng(3);
  const Rotation3 a = random_rotation(rng, kPi);
  const Rotation3 b = random_rotation(rng, kPi);
  CHECK(rotation_error_deg(a, b) ==
        doctest::Approx(rotation_error_deg(b, a)).epsilon(1e-12));
}

TEST_CASE("translation angle error on known directions") {
  CHECK(translation_angle_error_deg({1, 0, 0}, {0, 1, 0}) ==
        doctest::Approx(90.0).epsilon(1e-12));
  CHECK(translation_angle_error_deg({2, 0, 0}, {5, 0, 0}) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(translation_angle_error_deg({1, 1, 0}, {-1, -1, 0}) ==
        doctest::Approx(180.0).epsilon(1e-9));
  CHECK_THROWS_AS(translation_angle_error_deg({0, 0, 0}, {1, 0, 0}),
                  InvalidInput);
  CHECK_THROWS_AS(translation_angle_error_deg({1, 0, 0}, {0, 0, 0}),
                  InvalidInput);
}

TEST_CASE("absolute translation error is the euclidean gap") {
  CHECK(translation_abs_error({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(translation_abs_error({1, 0, 0}, {0, 0, 0}) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(translation_abs_error({1, 2, 2}, {0, 0, 0}) ==
        doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("default threshold grids") {
  const ThresholdGrid deg = ThresholdGrid::degrees_default();
  REQUIRE(deg.values().size() == 10);
  CHECK(deg.values().front() == 1.0);
  CHECK(deg.values().back() == 10.0);
  CHECK(deg.unit() == ThresholdUnit::degrees);

  const ThresholdGrid m = ThresholdGrid::meters_default();
  REQUIRE(m.values().size() == 20);
  CHECK(m.values().front() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(m.values().back() == doctest::Approx(5.0).epsilon(1e-12));
  // Uniform spacing.
  const double step = m.values()[1] - m.values()[0];
  for (size_t i = 1; i < m.values().size(); ++i)
    CHECK(m.values()[i] - m.values()[i - 1] ==
          doctest::Approx(step).epsilon(1e-9));
  CHECK(m.unit() == ThresholdUnit::meters);

  const ThresholdGrid px = ThresholdGrid::pixels_default();
  REQUIRE(px.values().size() == 20);
  CHECK(px.values().front() == 1.0);
  CHECK(px.values().back() == 20.0);
  CHECK(px.unit() == ThresholdUnit::pixels);
}

TEST_CASE("threshold grid validation") {
  CHECK_THROWS_AS(ThresholdGrid({}, ThresholdUnit::degrees), InvalidInput);
  CHECK_THROWS_AS(ThresholdGrid({1.0, 1.0}, ThresholdUnit::degrees),
                  InvalidInput);
  CHECK_THROWS_AS(ThresholdGrid({2.0, 1.0}, ThresholdUnit::degrees),
                  InvalidInput);
  CHECK_THROWS_AS(ThresholdGrid({0.0, 1.0}, ThresholdUnit::degrees),
                  InvalidInput);
  CHECK_THROWS_AS(ThresholdGrid({-1.0, 1.0}, ThresholdUnit::degrees),
                  InvalidInput);
}

TEST_CASE("maa on hand-computed examples") {
  const ThresholdGrid deg = ThresholdGrid::degrees_default();
  const std::vector<double> errs{0.5, 1.5, 2.5};
  // Fractions under thresholds 1..10: 1/3, 2/3, then 1 for 3..10.
  CHECK(maa(errs, deg) == doctest::Approx(0.9).epsilon(1e-12));

  const ThresholdGrid small({1.0, 2.0, 3.0}, ThresholdUnit::degrees);
  CHECK(maa(errs, small) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  // Boundary: an error exactly at a threshold counts as accurate.
  CHECK(maa(std::vector<double>{1.0}, small) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("maa counts failures against every threshold") {
  const ThresholdGrid deg = ThresholdGrid::degrees_default();
  CHECK(maa(std::vector<double>{kInf}, deg) == 0.0);
  CHECK(maa(std::vector<double>{0.5, kInf}, deg) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(maa(std::vector<double>{}, deg), InvalidInput);
}

TEST_CASE("scene summary medians use the mean-of-middles convention") {
  MetricGrids grids;
  std::vector<PairErrors> pairs;
  for (int inl : {4, 1, 3, 2}) {
    PairErrors pe;
    pe.rot_deg = inl;  // reuse the values for the rotation channel
    pe.trans_angle_deg = 0.5;
    pe.trans_abs_m = 0.1;
    pe.reproj_px = 1.0;
    pe.inlier_count = inl;
    pe.runtime_s = 0.25 * inl;
    pairs.push_back(pe);
  }
  const SceneSummary s = summarize_scene(pairs, grids);
  CHECK(s.median_inliers == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(s.rot.median == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(s.rot.mean == doctest::Approx(2.5).epsilon(1e-12));

  pairs.pop_back();  // odd count: {4, 1, 3} -> middle 3
  const SceneSummary odd = summarize_scene(pairs, grids);
  CHECK(odd.rot.median == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("scene summary combines rotation and translation maa") {
  MetricGrids grids;
  std::vector<PairErrors> pairs;
  PairErrors good;
  good.rot_deg = 0.5;
  good.trans_angle_deg = 0.5;
  good.trans_abs_m = 0.05;
  good.reproj_px = 0.5;
  good.inlier_count = 30;
  pairs.push_back(good);
  pairs.push_back(PairErrors::failure(0.1));
  const SceneSummary s = summarize_scene(pairs, grids);
  CHECK(s.rot.maa == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.trans_angle.maa == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.combined_pose_maa ==
        doctest::Approx(0.5 * (s.rot.maa + s.trans_angle.maa)).epsilon(1e-12));
  // A failure contributes infinite errors and zero inliers.
  const PairErrors f = PairErrors::failure(0.25);
  CHECK(f.rot_deg == kInf);
  CHECK(f.trans_angle_deg == kInf);
  CHECK(f.trans_abs_m == kInf);
  CHECK(f.reproj_px == kInf);
  CHECK(f.inlier_count == 0);
  CHECK(f.runtime_s == 0.25);
}

}  // TEST_SUITE("metrics")
