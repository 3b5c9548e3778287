#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "homkit/errors.hpp"
#include "homkit/robust.hpp"
#include "test_util.hpp"

using namespace homkit;
using namespace homkit::testutil;

namespace {

// Worst transfer disagreement between two pixel-space maps over an image grid.
double transfer_gap_px(const Homography& a, const Homography& b) {
  double worst = 0;
  for (double x : {100.0, 512.0, 900.0})
    for (double y : {100.0, 384.0, 700.0})
      worst = std::max(
          worst, (transfer(a, {x, y}) - transfer(b, {x, y})).norm());
  return worst;
}

Correspondence plain_corr(double x1, double y1, double x2, double y2,
                          double snn = 0.2) {
  Correspondence c;
  c.x1 = x1;
  c.y1 = y1;
  c.x2 = x2;
  c.y2 = y2;
  c.snn = snn;
  return c;
}

}  // namespace

TEST_SUITE("robust") {

TEST_CASE("prefilter keeps the right subsets") {
  std::vector<Correspondence> corrs;
  for (int i = 0; i < 6; ++i) {
    Correspondence c = plain_corr(i, 0, i, 0, 0.1 * (i + 1));
    c.score = 0.1 * (6 - i);
    corrs.push_back(c);
  }
  CHECK(prefilter_indices(corrs, Prefilter::none()) ==
        std::vector<int>{0, 1, 2, 3, 4, 5});
  CHECK(prefilter_indices(corrs, Prefilter::snn_max(0.35)) ==
        std::vector<int>{0, 1, 2});
  CHECK(prefilter_indices(corrs, Prefilter::score_min(0.35)) ==
        std::vector<int>{0, 1, 2});
  // top_k sorts by score descending; ties keep the original order.
  corrs[1].score = 0.6;  // tie with index 0
  CHECK(prefilter_indices(corrs, Prefilter::top_k(3)) ==
        std::vector<int>{0, 1, 2});
  CHECK(prefilter_indices(corrs, Prefilter::top_k(100)).size() == 6);

  corrs[2].score.reset();
  CHECK_THROWS_AS(prefilter_indices(corrs, Prefilter::top_k(2)), InvalidInput);
  CHECK_THROWS_AS(prefilter_indices(corrs, Prefilter::score_min(0.1)),
                  InvalidInput);
  CHECK_NOTHROW(prefilter_indices(corrs, Prefilter::snn_max(0.5)));
}

TEST_CASE("uniform sampling draws distinct in-range indices") {
  Rng rng(5);
  std::vector<int> histogram(6, 0);
  for (int t = 0; t < 3000; ++t) {
    std::vector<int> s = sample_uniform(6, 4, rng);
    REQUIRE(s.size() == 4);
    std::vector<int> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::unique(sorted.begin(), sorted.end()) == sorted.end());
    for (int i : s) {
      REQUIRE(i >= 0);
      REQUIRE(i < 6);
      ++histogram[i];
    }
  }
  // Each index is expected 2000 times; allow a wide band.
  for (int count : histogram) {
    CHECK(count > 1700);
    CHECK(count < 2300);
  }
}

TEST_CASE("prosac sampling grows from the best-ranked prefix") {
  Rng rng(7);
  // Iteration 1 must use exactly the top-m prefix.
  std::vector<int> first = sample_prosac(100, 4, 1, rng);
  std::sort(first.begin(), first.end());
  CHECK(first == std::vector<int>{0, 1, 2, 3});

  // Early iterations stay inside a small prefix; the schedule only grows.
  int max_seen = 3;
  for (int t = 1; t <= 200; ++t) {
    std::vector<int> s = sample_prosac(100, 4, t, rng);
    REQUIRE(s.size() == 4);
    std::vector<int> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::unique(sorted.begin(), sorted.end()) == sorted.end());
    CHECK(sorted.front() >= 0);
    max_seen = std::max(max_seen, sorted.back());
  }
  CHECK(max_seen < 100);  // 200 iterations never reach the full list

  // Once the budget is exhausted the sampler falls back to uniform over all.
  bool saw_tail = false;
  for (int rep = 0; rep < 200 && !saw_tail; ++rep) {
    std::vector<int> s = sample_prosac(100, 4, 1000000, rng, 200);
    if (*std::max_element(s.begin(), s.end()) >= 90) saw_tail = true;
  }
  CHECK(saw_tail);
}

TEST_CASE("cheirality check requires one-sided homogeneous weights") {
  // Third row (1, 0, 0.5): w = u + 0.5 flips sign across u = -0.5.
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m.row(2) << 1, 0, 0.5;
  const Homography h = Homography::from_matrix(m);
  std::vector<Correspondence> corrs{plain_corr(1, 0, 0, 0),
                                    plain_corr(2, 1, 0, 0),
                                    plain_corr(-1, 0, 0, 0)};
  const std::vector<int> same{0, 1};
  const std::vector<int> mixed{0, 2};
  CHECK(sample_cheirality_check(h, corrs, same));
  CHECK_FALSE(sample_cheirality_check(h, corrs, mixed));
  // A vanishing weight fails the check.
  std::vector<Correspondence> on_line{plain_corr(-0.5, 0, 0, 0),
                                      plain_corr(1, 0, 0, 0)};
  const std::vector<int> both{0, 1};
  CHECK_FALSE(sample_cheirality_check(h, on_line, both));
}

TEST_CASE("scorers compute their documented objectives") {
  const Homography id = Homography::from_matrix(Eigen::Matrix3d::Identity());
  // Residuals 1, 2, 5 (one-sided |p2 - H(p1)|).
  std::vector<Correspondence> corrs{plain_corr(0, 0, 1, 0),
                                    plain_corr(0, 0, 0, 2),
                                    plain_corr(0, 0, 3, 4)};
  const double theta = 3.0;

  const ScoreResult rs = score(corrs, id, Scorer::ransac, theta);
  CHECK(rs.value == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rs.mask == std::vector<std::uint8_t>{1, 1, 0});

  const ScoreResult ms = score(corrs, id, Scorer::msac, theta);
  CHECK(ms.value == doctest::Approx(1.0 + 4.0 + 9.0).epsilon(1e-12));
  CHECK(ms.mask == rs.mask);

  const ScoreResult ls = score(corrs, id, Scorer::lmeds, theta);
  CHECK(ls.value == doctest::Approx(4.0).epsilon(1e-12));  // median of {1,4,25}
}

TEST_CASE("score orderings are strict") {
  CHECK(score_better(3, 2, Scorer::ransac));
  CHECK_FALSE(score_better(2, 3, Scorer::ransac));
  CHECK_FALSE(score_better(2, 2, Scorer::ransac));
  CHECK(score_better(2, 3, Scorer::msac));
  CHECK_FALSE(score_better(3, 3, Scorer::msac));
  CHECK(score_better(1, 2, Scorer::lmeds));
  CHECK_FALSE(score_better(2, 1, Scorer::lmeds));
}

TEST_CASE("symmetric scoring uses the two-sided residual") {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 0) = m(1, 1) = 2.0;  // scale by 2, inverse halves
  const Homography h = Homography::from_matrix(m);
  std::vector<Correspondence> corrs{plain_corr(1, 0, 5, 0)};
  // Forward residual 3; symmetric sqrt(9 + 2.25).
  const double theta = 3.2;
  CHECK(score(corrs, h, Scorer::ransac, theta, false).mask[0] == 1);
  CHECK(score(corrs, h, Scorer::ransac, theta, true).mask[0] == 0);
}

TEST_CASE("adaptive iteration count on known values") {
  CHECK(ransac_iterations_needed(0.5, 4, 0.999, 100000) == 108);
  CHECK(ransac_iterations_needed(1.0, 4, 0.999, 100000) == 1);
  CHECK(ransac_iterations_needed(0.0, 4, 0.999, 100000) == 100000);
  CHECK(ransac_iterations_needed(0.5, 4, 0.999, 50) == 50);
  CHECK(ransac_iterations_needed(0.9999, 2, 0.5, 100000) == 1);
}

TEST_CASE("local optimization never degrades the hypothesis") {
  Rng rng(101);
  PixelSceneConfig cfg;
  cfg.num_inliers = 60;
  cfg.num_outliers = 25;
  cfg.noise_px = 1.0;
  const PixelScene ps = make_pixel_scene(rng, cfg);

  // Start from a hypothesis fitted to four noisy inliers only.
  std::vector<PointPair> four;
  for (int k = 0; k < 4; ++k) {
    const Correspondence& c = ps.corrs[ps.inlier_idx[k]];
    four.push_back({c.p1(), c.p2()});
  }
  const Homography rough = dlt(four);
  const double theta = 3.0;
  for (Scorer scorer : {Scorer::ransac, Scorer::msac, Scorer::lmeds}) {
    const double before = score(ps.corrs, rough, scorer, theta).value;
    const auto [refined, mask] = lo_refine(ps.corrs, rough, theta, scorer);
    const double after = score(ps.corrs, refined, scorer, theta).value;
    CHECK_FALSE(score_better(before, after, scorer));
  }
  // With the MSAC objective the refit should be a strict improvement here.
  const double before = score(ps.corrs, rough, Scorer::msac, theta).value;
  const auto [refined, mask] = lo_refine(ps.corrs, rough, theta, Scorer::msac);
  CHECK(score(ps.corrs, refined, Scorer::msac, theta).value < before);
  CHECK(transfer_gap_px(refined, ps.h_pix) < transfer_gap_px(rough, ps.h_pix));
}

TEST_CASE("two-point affine solver is exact on similarity maps") {
  Rng rng(103);
  for (int rep = 0; rep < 20; ++rep) {
    const Homography h = similarity_homography(
        rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0), rng.uniform(-40, 40),
        rng.uniform(-40, 40));
    const Correspondence a = sift_corr_under(
        h, {rng.uniform(0, 300), rng.uniform(0, 300)}, rng.uniform(0, 2 * kPi),
        rng.uniform(1.0, 4.0));
    const Correspondence b = sift_corr_under(
        h, {rng.uniform(400, 700), rng.uniform(400, 700)},
        rng.uniform(0, 2 * kPi), rng.uniform(1.0, 4.0));
    const auto est = solver_two_ac(a, b);
    REQUIRE(est.has_value());
    CHECK(transfer_gap_px(*est, h) < 1e-7);
  }
}

TEST_CASE("two-point affine solver rejects degenerate inputs") {
  const Homography h = similarity_homography(1.2, 0.3, 10, -5);
  const Correspondence a = sift_corr_under(h, {10, 20}, 0.4, 2.0);
  CHECK_FALSE(solver_two_ac(a, a).has_value());  // coincident points
  Correspondence bad = sift_corr_under(h, {200, 100}, 0.1, 2.0);
  bad.s1 = -1.0;  // invalid frame
  CHECK_FALSE(solver_two_ac(a, bad).has_value());
}

TEST_CASE("estimate recovers an exact model with every method-style config") {
  Rng rng(107);
  PixelSceneConfig clean;
  clean.num_inliers = 40;
  const PixelScene ps = make_pixel_scene(rng, clean);

  EstimatorConfig base;
  base.inlier_threshold_px = 3.0;
  base.max_iterations = 500;
  base.seed = 9;

  for (Scorer scorer : {Scorer::ransac, Scorer::msac, Scorer::lmeds}) {
    EstimatorConfig c = base;
    c.scorer = scorer;
    const EstimateResult r = estimate(ps.corrs, c);
    REQUIRE(r.homography.has_value());
    CHECK(transfer_gap_px(*r.homography, ps.h_pix) < 1e-6);
    CHECK(r.inlier_count() == static_cast<int>(ps.corrs.size()));
  }

  EstimatorConfig lo = base;
  lo.local_opt = LocalOpt::lo_plus;
  const EstimateResult rlo = estimate(ps.corrs, lo);
  REQUIRE(rlo.homography.has_value());
  CHECK(transfer_gap_px(*rlo.homography, ps.h_pix) < 1e-6);

  EstimatorConfig lsq = base;
  lsq.mode = FitMode::least_squares;
  const EstimateResult rls = estimate(ps.corrs, lsq);
  REQUIRE(rls.homography.has_value());
  CHECK(transfer_gap_px(*rls.homography, ps.h_pix) < 1e-6);
  CHECK(rls.iterations_used == 0);
}

TEST_CASE("estimate is robust to heavy contamination") {
  Rng rng(109);
  PixelSceneConfig cfg;
  cfg.num_inliers = 60;
  cfg.num_outliers = 40;
  cfg.noise_px = 1.0;
  const PixelScene ps = make_pixel_scene(rng, cfg);

  for (Sampler sampler : {Sampler::uniform, Sampler::prosac}) {
    for (Scorer scorer : {Scorer::ransac, Scorer::msac, Scorer::lmeds}) {
      EstimatorConfig c;
      c.inlier_threshold_px = 3.0;
      c.max_iterations = 2000;
      c.sampler = sampler;
      c.scorer = scorer;
      c.local_opt = LocalOpt::lo_plus;
      c.seed = 31;
      const EstimateResult r = estimate(ps.corrs, c);
      REQUIRE(r.homography.has_value());
      int hits = 0, false_pos = 0;
      for (size_t i = 0; i < ps.corrs.size(); ++i) {
        if (ps.is_inlier[i] && r.inlier_mask[i]) ++hits;
        if (!ps.is_inlier[i] && r.inlier_mask[i]) ++false_pos;
      }
      CHECK(hits >= 48);       // >= 80% recall at a 3 px gate on 1 px noise
      CHECK(false_pos <= 4);   // <= 10% of the outliers
    }
  }
}

TEST_CASE("estimate is deterministic given the same config") {
  Rng rng(113);
  PixelSceneConfig cfg;
  cfg.num_inliers = 40;
  cfg.num_outliers = 30;
  cfg.noise_px = 1.0;
  const PixelScene ps = make_pixel_scene(rng, cfg);
  EstimatorConfig c;
  c.inlier_threshold_px = 2.5;
  c.max_iterations = 300;
  c.local_opt = LocalOpt::lo_plus;
  c.seed = 77;
  const EstimateResult a = estimate(ps.corrs, c);
  const EstimateResult b = estimate(ps.corrs, c);
  REQUIRE(a.homography.has_value());
  REQUIRE(b.homography.has_value());
  CHECK((a.homography->matrix() - b.homography->matrix()).norm() == 0.0);
  CHECK(a.inlier_mask == b.inlier_mask);
  CHECK(a.score == b.score);
  CHECK(a.iterations_used == b.iterations_used);
}

TEST_CASE("estimate honors the iteration floor and the lmeds budget") {
  Rng rng(127);
  PixelSceneConfig clean;
  clean.num_inliers = 30;
  const PixelScene ps = make_pixel_scene(rng, clean);

  EstimatorConfig c;
  c.inlier_threshold_px = 3.0;
  c.min_iterations = 25;
  c.max_iterations = 10000;
  c.scorer = Scorer::ransac;
  c.seed = 5;
  // Clean data collapses the adaptive cap to 1; the floor keeps it going.
  CHECK(estimate(ps.corrs, c).iterations_used == 25);

  EstimatorConfig lm;
  lm.inlier_threshold_px = 3.0;
  lm.scorer = Scorer::lmeds;
  lm.max_iterations = 7;
  lm.seed = 5;
  // LMEDS has no inlier-ratio stop; it always spends the full budget.
  CHECK(estimate(ps.corrs, lm).iterations_used == 7);
}

TEST_CASE("estimate reports the mask over the full input") {
  Rng rng(131);
  PixelSceneConfig cfg;
  cfg.num_inliers = 30;
  cfg.shuffle = false;
  PixelScene ps = make_pixel_scene(rng, cfg);

  // A geometrically perfect correspondence with a hopeless snn: excluded
  // from estimation by the ratio filter, but still an inlier of the result.
  Correspondence extra =
      sift_corr_under(ps.h_pix, {333.0, 444.0}, 0.7, 2.0, 0.99);
  ps.corrs.push_back(extra);

  EstimatorConfig c;
  c.inlier_threshold_px = 3.0;
  c.snn_threshold = 0.55;
  c.max_iterations = 200;
  c.seed = 3;
  const EstimateResult r = estimate(ps.corrs, c);
  REQUIRE(r.homography.has_value());
  REQUIRE(r.inlier_mask.size() == ps.corrs.size());
  CHECK(r.inlier_mask.back() == 1);
}

TEST_CASE("prosac reaches a clean sample first on score-ranked data") {
  const Homography h = similarity_homography(1.1, 0.2, 30, -20);
  Rng rng(137);
  std::vector<Correspondence> corrs;
  for (int i = 0; i < 8; ++i) {  // 8 exact inliers with the best scores
    Correspondence c = sift_corr_under(
        h, {rng.uniform(0, 800), rng.uniform(0, 600)}, rng.uniform(0, 2 * kPi),
        2.0, 0.3);
    c.score = 0.9 - 0.01 * i;
    corrs.push_back(c);
  }
  for (int i = 0; i < 16; ++i) {  // gross outliers with poor scores
    Correspondence c = plain_corr(rng.uniform(0, 800), rng.uniform(0, 600),
                                  rng.uniform(0, 800), rng.uniform(0, 600),
                                  0.8);
    c.score = 0.3 - 0.01 * i;
    corrs.push_back(c);
  }
  EstimatorConfig c;
  c.inlier_threshold_px = 3.0;
  c.sampler = Sampler::prosac;
  c.scorer = Scorer::ransac;
  c.min_iterations = 1;
  c.max_iterations = 1;  // only the first, highest-ranked sample
  c.seed = 1;
  const EstimateResult r = estimate(corrs, c);
  REQUIRE(r.homography.has_value());
  CHECK(transfer_gap_px(*r.homography, h) < 1e-6);
}

TEST_CASE("estimate fails cleanly on hopeless input") {
  // Fewer points than a minimal sample.
  std::vector<Correspondence> tiny{plain_corr(0, 0, 1, 1),
                                   plain_corr(5, 5, 6, 6),
                                   plain_corr(9, 2, 8, 1)};
  EstimatorConfig c;
  c.inlier_threshold_px = 3.0;
  c.max_iterations = 50;
  EstimateResult r = estimate(tiny, c);
  CHECK_FALSE(r.homography.has_value());
  CHECK(r.inlier_mask == std::vector<std::uint8_t>(tiny.size(), 0));

  // Collinear image-1 points: every minimal sample is degenerate.
  std::vector<Correspondence> line;
  for (int i = 0; i < 12; ++i)
    line.push_back(plain_corr(i, 2.0 * i, 100 + 3 * i, 50 - i));
  r = estimate(line, c);
  CHECK_FALSE(r.homography.has_value());
  CHECK(r.iterations_used == c.max_iterations);

  EstimatorConfig lsq = c;
  lsq.mode = FitMode::least_squares;
  CHECK_FALSE(estimate(line, lsq).homography.has_value());
}

TEST_CASE("estimator config validation") {
  EstimatorConfig c;
  CHECK_NOTHROW(c.validate());
  c.inlier_threshold_px = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.confidence = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.confidence = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.min_iterations = 10;
  c.max_iterations = 5;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.min_iterations = 0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("two-point solver drives the estimator on similarity scenes") {
  const Homography h = similarity_homography(0.8, -0.4, 120, 60);
  Rng rng(139);
  std::vector<Correspondence> corrs;
  for (int i = 0; i < 20; ++i)
    corrs.push_back(sift_corr_under(h,
                                    {rng.uniform(0, 900), rng.uniform(0, 700)},
                                    rng.uniform(0, 2 * kPi),
                                    rng.uniform(1.0, 4.0)));
  for (int i = 0; i < 10; ++i) {
    Correspondence c = plain_corr(rng.uniform(0, 900), rng.uniform(0, 700),
                                  rng.uniform(0, 900), rng.uniform(0, 700),
                                  0.8);
    c.phi1 = rng.uniform(0, 2 * kPi);
    c.phi2 = rng.uniform(0, 2 * kPi);
    c.s1 = 2.0;
    c.s2 = 3.0;
    corrs.push_back(c);
  }
  EstimatorConfig c;
  c.inlier_threshold_px = 3.0;
  c.solver = MinimalSolver::two_ac;
  c.max_iterations = 500;
  c.seed = 17;
  const EstimateResult r = estimate(corrs, c);
  REQUIRE(r.homography.has_value());
  CHECK(transfer_gap_px(*r.homography, h) < 1e-6);
  int recall = 0;
  for (int i = 0; i < 20; ++i) recall += r.inlier_mask[i];
  CHECK(recall == 20);
}

}  // TEST_SUITE("robust")
