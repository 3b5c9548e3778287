#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "homkit/geom.hpp"
#include "homkit/rng.hpp"

namespace homkit {

enum class PrefilterKind { none, snn_max, score_min, top_k };

/// Correspondence prefilter. snn_max keeps snn <= value; score_min keeps
/// learned score >= value; top_k keeps the k best by learned score (output
/// sorted by score descending, ties by original index). The other modes keep
/// input order.
struct Prefilter {
  PrefilterKind kind = PrefilterKind::none;
  double value = 0.0;
  int k = 0;

  static Prefilter none() { return {}; }
  static Prefilter snn_max(double v) { return {PrefilterKind::snn_max, v, 0}; }
  static Prefilter score_min(double v) { return {PrefilterKind::score_min, v, 0}; }
  static Prefilter top_k(int k) { return {PrefilterKind::top_k, 0.0, k}; }
};

/// Indices of correspondences kept by the filter. Throws InvalidInput when a
/// score-based mode is requested but a correspondence has no score.
std::vector<int> prefilter_indices(std::span<const Correspondence> corrs,
                                   const Prefilter& filter);

/// Convenience overload returning the surviving correspondences.
std::vector<Correspondence> prefilter(std::span<const Correspondence> corrs,
                                      const Prefilter& filter);

enum class Sampler { uniform, prosac };
enum class Scorer { ransac, msac, lmeds };
enum class LocalOpt { none, lo_plus };
enum class MinimalSolver { four_point, two_ac };
enum class FitMode { robust, least_squares };

struct EstimatorConfig {
  double inlier_threshold_px = 3.0;  // theta
  double confidence = 0.999;         // eta
  int max_iterations = 10000;
  int min_iterations = 1;
  std::optional<double> snn_threshold;
  Prefilter prefilter;
  Sampler sampler = Sampler::uniform;
  Scorer scorer = Scorer::msac;
  LocalOpt local_opt = LocalOpt::none;
  MinimalSolver solver = MinimalSolver::four_point;
  FitMode mode = FitMode::robust;
  bool symmetric_residual = false;
  int prosac_budget = 200000;  // T_N of the growth schedule
  std::uint64_t seed = 0;

  /// Throws InvalidInput when ranges are violated (theta > 0, 0 < eta < 1,
  /// max_iterations >= min_iterations >= 1).
  void validate() const;
};

struct EstimateResult {
  std::optional<Homography> homography;
  /// Exactly {i : residual_i <= theta} over the full input list under the
  /// final homography (independent of prefiltering).
  std::vector<std::uint8_t> inlier_mask;
  double score = 0.0;
  int iterations_used = 0;
  double runtime_s = 0.0;

  int inlier_count() const;
};

/// Draws `sample_size` distinct indices uniformly from [0, count).
std::vector<int> sample_uniform(int count, int sample_size, Rng& rng);

/// PROSAC-style progressive sample for 1-based iteration t over data sorted
/// by quality (best first): the newest point of the current subset plus
/// sample_size-1 uniform draws from the earlier ones. Falls back to uniform
/// sampling once the growth schedule is exhausted.
std::vector<int> sample_prosac(int count, int sample_size, int iteration,
                               Rng& rng, int budget = 200000);

/// True when the homogeneous weights (H*x)_3 share one sign over the sample,
/// a necessary condition for the sample to lie on one side of the principal
/// plane (cheirality of the minimal sample).
bool sample_cheirality_check(const Homography& h,
                             std::span<const Correspondence> corrs,
                             std::span<const int> sample);

struct ScoreResult {
  /// ransac: inlier count (higher better); msac: truncated quadratic loss
  /// (lower better); lmeds: median squared residual (lower better).
  double value = 0.0;
  std::vector<std::uint8_t> mask;  // residual <= theta
};

/// Scores a hypothesis. The residual is the one-sided reprojection error in
/// image 2, |p2 - H(p1)|, or the symmetric transfer error when `symmetric`
/// is set. Points mapping to infinity get infinite residual.
ScoreResult score(std::span<const Correspondence> corrs, const Homography& h,
                  Scorer scorer, double theta, bool symmetric = false);

/// True when `candidate` beats `incumbent` under the scorer's ordering.
bool score_better(double candidate, double incumbent, Scorer scorer);

/// Standard adaptive stopping number ceil(log(1-eta)/log(1-w^m)), clamped to
/// [1, max_iterations]; returns max_iterations when w = 0 and 1 when w = 1.
int ransac_iterations_needed(double inlier_ratio, int sample_size,
                             double confidence, int max_iterations);

/// Local optimization: iterated DLT over the inliers at thresholds annealed
/// 4*theta -> theta in four steps, inliers weighted by their truncated
/// quadratic residual complement. Returns the best iterate under `scorer` at
/// theta; never worse than the input hypothesis.
std::pair<Homography, std::vector<std::uint8_t>> lo_refine(
    std::span<const Correspondence> corrs, const Homography& h, double theta,
    Scorer scorer = Scorer::msac, bool symmetric = false);

/// Minimal solver from two affine correspondences: each contributes two
/// point rows and four rows equating the local affinity of H with the
/// observed 2x2 map; solved as the null vector of the stacked 12x9 system.
/// The affine maps are taken from the SIFT frames of the correspondences.
std::optional<Homography> solver_two_ac(const Correspondence& a,
                                        const Correspondence& b);

/// Robust (or least-squares) homography estimation over pixel
/// correspondences. Deterministic: identical (corrs, config) give an
/// identical result apart from runtime_s.
EstimateResult estimate(std::span<const Correspondence> corrs,
                        const EstimatorConfig& config);

}  // namespace homkit
