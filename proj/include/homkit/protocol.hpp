#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "homkit/covest.hpp"
#include "homkit/dataset.hpp"
#include "homkit/metrics.hpp"
#include "homkit/robust.hpp"
#include "homkit/uncert.hpp"

namespace homkit {

/// Estimator presets runnable by name. The registry defines how a preset maps
/// to an EstimatorConfig; everything else (threshold, filter, budget, seed)
/// comes from tuning and the protocol.
std::vector<std::string> method_names();
bool has_method(const std::string& name);

/// Builds the estimator configuration of a named preset. `snn` = 1 disables
/// the ratio filter. Throws InvalidInput for unknown names.
EstimatorConfig make_estimator_config(const std::string& method, double theta,
                                      double snn, int max_iterations,
                                      std::uint64_t seed);

struct ProtocolConfig {
  std::vector<double> theta_grid{0.5, 1.0, 2.0, 3.0, 4.0, 8.0};
  std::vector<double> snn_grid{1.0, 0.8, 0.6};  // 1 = filter disabled
  int train_iterations = 1000;
  std::vector<int> test_sweep{10, 100, 1000, 10000};
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
};

/// Hyperparameters frozen by training; immutable inputs of the test run.
struct TunedMethod {
  std::string method;
  double inlier_threshold_px = 3.0;
  double snn_threshold = 1.0;
  double train_maa = 0.0;  // combined pose mAA achieved on the training split
};

struct TrainCell {
  double theta = 0;
  double snn = 1;
  double maa = 0;  // combined pose mAA averaged over training scenes
};

struct TrainReport {
  std::string method;
  std::vector<TrainCell> cells;  // full grid, theta-major order
  TunedMethod best;              // argmax cell; first in grid order on ties
};

/// Grid search over (theta, snn) per method on the training split, at the
/// fixed training iteration budget. Scenes with no training pairs are
/// ignored; throws InvalidInput when the whole dataset has none.
std::vector<TrainReport> run_training(const Dataset& dataset,
                                      const std::vector<std::string>& methods,
                                      const ProtocolConfig& config);

std::string tuned_methods_to_json(std::span<const TunedMethod> methods);
std::vector<TunedMethod> tuned_methods_from_json(const std::string& text);
std::string train_reports_to_json(std::span<const TrainReport> reports);

/// One CSV row of the benchmark table: a method evaluated on the test split
/// at one iteration budget. mAA columns are averages of per-scene mAA values;
/// medians are taken over all test pairs.
struct TestRow {
  std::string method;
  int max_iterations = 0;
  double rot_maa = 0;
  double trans_maa = 0;
  double combined_maa = 0;
  double abs_trans_maa = 0;
  double reproj_maa = 0;
  double median_inliers = 0;
  double median_time_s = 0;
};

struct TestReport {
  std::vector<TestRow> rows;
};

/// Runs every tuned method over the iteration sweep on the test split.
/// Deterministic apart from the timing column: the per-pair seed depends only
/// on (protocol seed, method, pair id), not on the budget or scheduling.
TestReport run_test(const Dataset& dataset,
                    std::span<const TunedMethod> methods,
                    const ProtocolConfig& config);

/// Header: method,max_iter,rot_mAA,trans_mAA,combined_mAA,abs_trans_mAA,
/// reproj_mAA,median_inliers,median_time_s. Without timing the last column is
/// dropped, which makes repeated runs byte-identical.
std::string test_report_csv(const TestReport& report, bool include_timing = true);

/// Scores one estimate against the ground truth of its pair: decomposes the
/// calibrated estimate (cheirality references = the estimate's own inliers),
/// takes the candidate closest to the ground-truth pose, and measures the
/// reprojection error of the ground-truth inliers under the inverse map.
/// Estimation failures yield infinite errors.
PairErrors evaluate_pair(const TestCase& tc, const EstimateResult& result);

struct UncertaintyReport {
  StatsReport global;
  std::map<std::string, StatsReport> per_scene;
};

/// Residual statistics of every ground-truth inlier against the pixel-space
/// ground-truth homography, over all pairs of all scenes.
UncertaintyReport run_uncertainty(const Dataset& dataset,
                                  const StatsFilters& filters = {},
                                  int jobs = 1);

std::string stats_report_json(const StatsReport& report);

/// CSV (lo,hi,count) of one histogram channel; throws InvalidInput for
/// unknown channels.
std::string histogram_csv(const StatsReport& report, const std::string& channel);

/// Covariance comparison of one pair: the four fits of compare_four on the
/// ground-truth inliers, the scale-noise spread, and the loss metrics.
struct CovestRow {
  std::string scene;
  std::string pair_id;
  int num_inliers = 0;
  double sigma_min = 0;  // smallest per-point sigma under scale weighting
  double sigma_max = 0;
  double sigma0_equal = 0;
  double sigma0_scale = 0;
  double l_mean_alg_ml = 1;      // algebraic vs ML, equal noise
  double l_max_alg_ml = 1;
  double l_mean_equal_scale = 1;  // equal-weight ML vs scale-weight ML
  double l_max_equal_scale = 1;
  double rmse_ref = 0, rmse_alg = 0, rmse_ml_equal = 0, rmse_ml_scale = 0;
  double rmse_w_ref = 0, rmse_w_alg = 0, rmse_w_ml_equal = 0,
         rmse_w_ml_scale = 0;
};

struct CovestReport {
  std::vector<CovestRow> rows;
  CovestRow mean;  // column-wise mean over rows (scene "(mean)")
  CovestRow max;   // column-wise max over rows (scene "(max)")
  int skipped = 0;  // pairs with too few inliers for a variance factor
};

/// Runs the covariance comparison over every pair with at least 5
/// ground-truth inliers.
CovestReport run_covest(const Dataset& dataset, double base_sigma,
                        const ProtocolConfig& config);

std::string covest_report_csv(const CovestReport& report);

}  // namespace homkit
