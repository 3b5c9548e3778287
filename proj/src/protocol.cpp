#include "homkit/protocol.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <json.hpp>

#include "homkit/errors.hpp"
#include "homkit/parallel.hpp"

namespace homkit {

namespace {

using njson = nlohmann::ordered_json;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shortest round-trip decimal form; the reason reports are byte-identical
// across runs.
std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct MethodSpec {
  const char* name;
  Sampler sampler;
  Scorer scorer;
  LocalOpt local_opt;
  MinimalSolver solver;
  FitMode mode;
};

constexpr MethodSpec kMethods[] = {
    {"lsq", Sampler::uniform, Scorer::msac, LocalOpt::none,
     MinimalSolver::four_point, FitMode::least_squares},
    {"lmeds", Sampler::uniform, Scorer::lmeds, LocalOpt::none,
     MinimalSolver::four_point, FitMode::robust},
    {"ransac", Sampler::uniform, Scorer::ransac, LocalOpt::none,
     MinimalSolver::four_point, FitMode::robust},
    {"msac", Sampler::uniform, Scorer::msac, LocalOpt::none,
     MinimalSolver::four_point, FitMode::robust},
    {"lo_msac", Sampler::uniform, Scorer::msac, LocalOpt::lo_plus,
     MinimalSolver::four_point, FitMode::robust},
    {"prosac_lo_msac", Sampler::prosac, Scorer::msac, LocalOpt::lo_plus,
     MinimalSolver::four_point, FitMode::robust},
    {"two_ac", Sampler::uniform, Scorer::msac, LocalOpt::none,
     MinimalSolver::two_ac, FitMode::robust},
};

const MethodSpec& find_method(const std::string& name) {
  for (const MethodSpec& m : kMethods)
    if (name == m.name) return m;
  throw InvalidInput("unknown method '" + name + "'");
}

// Pairs of one split, flattened with their scene of origin.
struct SplitPair {
  size_t scene;
  const TestCase* tc;
};

std::vector<std::string> scene_names(const Dataset& ds) {
  std::vector<std::string> names;
  names.reserve(ds.scenes.size());
  for (const DatasetScene& s : ds.scenes) names.push_back(s.name);
  return names;
}

std::vector<SplitPair> split_pairs(const Dataset& ds, const std::string& split) {
  std::vector<SplitPair> out;
  for (size_t s = 0; s < ds.scenes.size(); ++s)
    for (const TestCase& tc : ds.scenes[s].pairs)
      if (tc.split == split) out.push_back({s, &tc});
  if (out.empty())
    throw InvalidInput("dataset has no pairs in the '" + split + "' split");
  return out;
}

// Scene-averaged summary: mAA columns average per-scene mAA values so that
// large scenes do not dominate; medians pool all pairs.
struct SweepSummary {
  double rot_maa = 0, trans_maa = 0, combined_maa = 0;
  double abs_trans_maa = 0, reproj_maa = 0;
  double median_inliers = 0, median_time_s = 0;
};

SweepSummary summarize_split(const std::vector<SplitPair>& pairs,
                             std::span<const PairErrors> errors,
                             size_t num_scenes) {
  std::vector<std::vector<PairErrors>> by_scene(num_scenes);
  for (size_t i = 0; i < pairs.size(); ++i)
    by_scene[pairs[i].scene].push_back(errors[i]);

  MetricGrids grids;
  SweepSummary out;
  int scenes_used = 0;
  for (const auto& scene_errors : by_scene) {
    if (scene_errors.empty()) continue;
    SceneSummary s = summarize_scene(scene_errors, grids);
    out.rot_maa += s.rot.maa;
    out.trans_maa += s.trans_angle.maa;
    out.combined_maa += s.combined_pose_maa;
    out.abs_trans_maa += s.trans_abs.maa;
    out.reproj_maa += s.reproj.maa;
    ++scenes_used;
  }
  out.rot_maa /= scenes_used;
  out.trans_maa /= scenes_used;
  out.combined_maa /= scenes_used;
  out.abs_trans_maa /= scenes_used;
  out.reproj_maa /= scenes_used;

  std::vector<double> inliers, times;
  for (const PairErrors& e : errors) {
    inliers.push_back(e.inlier_count);
    times.push_back(e.runtime_s);
  }
  out.median_inliers = median_of(std::move(inliers));
  out.median_time_s = median_of(std::move(times));
  return out;
}

std::uint64_t pair_seed(const ProtocolConfig& config, const std::string& method,
                        const std::string& pair_id) {
  return derive_seed(config.seed, fnv1a64(method), fnv1a64(pair_id));
}

}  // namespace

std::vector<std::string> method_names() {
  std::vector<std::string> names;
  for (const MethodSpec& m : kMethods) names.emplace_back(m.name);
  return names;
}

bool has_method(const std::string& name) {
  for (const MethodSpec& m : kMethods)
    if (name == m.name) return true;
  return false;
}

EstimatorConfig make_estimator_config(const std::string& method, double theta,
                                      double snn, int max_iterations,
                                      std::uint64_t seed) {
  const MethodSpec& spec = find_method(method);
  EstimatorConfig c;
  c.inlier_threshold_px = theta;
  c.max_iterations = max_iterations;
  if (snn < 1.0) c.snn_threshold = snn;
  c.sampler = spec.sampler;
  c.scorer = spec.scorer;
  c.local_opt = spec.local_opt;
  c.solver = spec.solver;
  c.mode = spec.mode;
  c.seed = seed;
  c.validate();
  return c;
}

void ProtocolConfig::validate() const {
  if (theta_grid.empty() || snn_grid.empty())
    throw InvalidInput("tuning grids must be non-empty");
  for (double t : theta_grid)
    if (!(t > 0)) throw InvalidInput("theta grid values must be positive");
  for (double s : snn_grid)
    if (!(s > 0) || s > 1)
      throw InvalidInput("snn grid values must be in (0, 1]");
  if (train_iterations < 1)
    throw InvalidInput("train_iterations must be >= 1");
  if (test_sweep.empty()) throw InvalidInput("test sweep must be non-empty");
  for (int it : test_sweep)
    if (it < 1) throw InvalidInput("test sweep budgets must be >= 1");
  if (jobs < 1) throw InvalidInput("jobs must be >= 1");
}

PairErrors evaluate_pair(const TestCase& tc, const EstimateResult& result) {
  PairErrors pe = PairErrors::failure(result.runtime_s);
  pe.inlier_count = result.inlier_count();
  if (!result.homography) return pe;
  const Homography& h_pix = *result.homography;

  // Reprojection of the ground-truth inliers under the image-2 -> image-1
  // estimate. A singular estimate or a point at infinity counts as failure.
  try {
    Homography h_inv = h_pix.inverse();
    double sum = 0;
    for (int idx : tc.inlier_indices)
      sum += reproj_error(h_inv, tc.corrs[idx]);
    if (!tc.inlier_indices.empty() && std::isfinite(sum))
      pe.reproj_px = sum / static_cast<double>(tc.inlier_indices.size());
  } catch (const Error&) {
    return pe;
  }

  // Decompose on calibrated coordinates; the estimate's own inliers resolve
  // the plane-side ambiguity.
  std::vector<HomographyDecomposition> candidates;
  try {
    Eigen::Matrix3d k1_inv = tc.k1.inverse();
    Eigen::Matrix3d k2_inv = tc.k2.inverse();
    Homography h_norm =
        Homography::from_matrix(k2_inv * h_pix.matrix() * tc.k1);
    std::vector<PointPair> refs;
    for (size_t i = 0; i < tc.corrs.size(); ++i) {
      if (!result.inlier_mask[i]) continue;
      Eigen::Vector3d q1 = k1_inv * tc.corrs[i].p1().homogeneous();
      Eigen::Vector3d q2 = k2_inv * tc.corrs[i].p2().homogeneous();
      refs.push_back({q1.hnormalized(), q2.hnormalized()});
    }
    candidates = decompose_homography(h_norm, refs);
  } catch (const Error&) {
    return pe;
  }
  if (candidates.empty()) return pe;

  const Rotation3& r_gt = tc.rel_pose.rotation;
  const Eigen::Vector3d& t_gt = tc.rel_pose.translation;
  const double t_gt_norm = t_gt.norm();
  double best_key = kInf;
  for (const HomographyDecomposition& cand : candidates) {
    double rot = rotation_error_deg(r_gt, cand.rotation);
    double trans;
    double trans_abs;
    const double est_norm = cand.translation.norm();
    if (t_gt_norm <= 1e-12) {
      trans = est_norm <= 1e-12 ? 0.0 : 180.0;
      trans_abs = 0.0;
    } else if (est_norm <= 1e-12) {
      trans = 180.0;  // estimate claims no translation, ground truth has one
      trans_abs = kInf;
    } else {
      trans = translation_angle_error_deg(t_gt, cand.translation);
      Eigen::Vector3d t_scaled = cand.translation * (t_gt_norm / est_norm);
      trans_abs = translation_abs_error(t_gt, t_scaled) * tc.scale_m;
    }
    double key = std::max(rot, trans);
    if (key < best_key) {
      best_key = key;
      pe.rot_deg = rot;
      pe.trans_angle_deg = trans;
      pe.trans_abs_m = trans_abs;
    }
  }
  return pe;
}

std::vector<TrainReport> run_training(const Dataset& dataset,
                                      const std::vector<std::string>& methods,
                                      const ProtocolConfig& config) {
  config.validate();
  if (methods.empty()) throw InvalidInput("no methods selected");
  for (const std::string& m : methods) find_method(m);
  std::vector<SplitPair> pairs = split_pairs(dataset, "train");

  const size_t cells =
      config.theta_grid.size() * config.snn_grid.size();
  std::vector<TrainReport> reports;
  for (const std::string& method : methods) {
    // One flat task list per method: every (cell, pair) combination.
    std::vector<PairErrors> errors(cells * pairs.size());
    parallel_for(errors.size(), config.jobs, [&](size_t task) {
      const size_t cell = task / pairs.size();
      const size_t pair_idx = task % pairs.size();
      const double theta = config.theta_grid[cell / config.snn_grid.size()];
      const double snn = config.snn_grid[cell % config.snn_grid.size()];
      const TestCase& tc = *pairs[pair_idx].tc;
      EstimatorConfig ec =
          make_estimator_config(method, theta, snn, config.train_iterations,
                                pair_seed(config, method, tc.id));
      errors[task] = evaluate_pair(tc, estimate(tc.corrs, ec));
    });

    TrainReport report;
    report.method = method;
    for (size_t cell = 0; cell < cells; ++cell) {
      SweepSummary s = summarize_split(
          pairs,
          {errors.data() + cell * pairs.size(), pairs.size()},
          dataset.scenes.size());
      TrainCell tc_cell;
      tc_cell.theta = config.theta_grid[cell / config.snn_grid.size()];
      tc_cell.snn = config.snn_grid[cell % config.snn_grid.size()];
      tc_cell.maa = s.combined_maa;
      report.cells.push_back(tc_cell);
    }
    const TrainCell* best = &report.cells.front();
    for (const TrainCell& c : report.cells)
      if (c.maa > best->maa) best = &c;
    report.best = {method, best->theta, best->snn, best->maa};
    reports.push_back(std::move(report));
  }
  return reports;
}

std::string tuned_methods_to_json(std::span<const TunedMethod> methods) {
  njson arr = njson::array();
  for (const TunedMethod& m : methods) {
    njson j;
    j["method"] = m.method;
    j["inlier_threshold_px"] = m.inlier_threshold_px;
    j["snn_threshold"] = m.snn_threshold;
    j["train_maa"] = m.train_maa;
    arr.push_back(std::move(j));
  }
  njson root;
  root["tuned_methods"] = std::move(arr);
  return root.dump(2) + "\n";
}

std::vector<TunedMethod> tuned_methods_from_json(const std::string& text) {
  njson root;
  try {
    root = njson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tuned methods: ") + e.what());
  }
  if (!root.is_object() || !root.contains("tuned_methods") ||
      !root["tuned_methods"].is_array())
    throw ParseError("tuned methods: missing 'tuned_methods' array");
  std::vector<TunedMethod> out;
  for (const njson& j : root["tuned_methods"]) {
    if (!j.is_object() || !j.contains("method") || !j["method"].is_string() ||
        !j.contains("inlier_threshold_px") ||
        !j["inlier_threshold_px"].is_number() ||
        !j.contains("snn_threshold") || !j["snn_threshold"].is_number())
      throw ParseError("tuned methods: malformed entry");
    TunedMethod m;
    m.method = j["method"].get<std::string>();
    m.inlier_threshold_px = j["inlier_threshold_px"].get<double>();
    m.snn_threshold = j["snn_threshold"].get<double>();
    if (j.contains("train_maa") && j["train_maa"].is_number())
      m.train_maa = j["train_maa"].get<double>();
    if (!has_method(m.method))
      throw InvalidInput("tuned methods: unknown method '" + m.method + "'");
    if (!(m.inlier_threshold_px > 0))
      throw InvalidInput("tuned methods: threshold must be positive");
    if (!(m.snn_threshold > 0) || m.snn_threshold > 1)
      throw InvalidInput("tuned methods: snn threshold must be in (0, 1]");
    out.push_back(std::move(m));
  }
  return out;
}

std::string train_reports_to_json(std::span<const TrainReport> reports) {
  njson arr = njson::array();
  for (const TrainReport& r : reports) {
    njson cells = njson::array();
    for (const TrainCell& c : r.cells) {
      njson cj;
      cj["theta"] = c.theta;
      cj["snn"] = c.snn;
      cj["combined_maa"] = c.maa;
      cells.push_back(std::move(cj));
    }
    njson j;
    j["method"] = r.method;
    j["grid"] = std::move(cells);
    j["best"] = {{"inlier_threshold_px", r.best.inlier_threshold_px},
                 {"snn_threshold", r.best.snn_threshold},
                 {"train_maa", r.best.train_maa}};
    arr.push_back(std::move(j));
  }
  njson root;
  root["training"] = std::move(arr);
  return root.dump(2) + "\n";
}

TestReport run_test(const Dataset& dataset,
                    std::span<const TunedMethod> methods,
                    const ProtocolConfig& config) {
  config.validate();
  if (methods.empty()) throw InvalidInput("no methods selected");
  for (const TunedMethod& m : methods) find_method(m.method);
  std::vector<SplitPair> pairs = split_pairs(dataset, "test");

  struct Task {
    size_t method;
    size_t budget;
    size_t pair;
  };
  std::vector<Task> tasks;
  for (size_t m = 0; m < methods.size(); ++m)
    for (size_t b = 0; b < config.test_sweep.size(); ++b)
      for (size_t p = 0; p < pairs.size(); ++p) tasks.push_back({m, b, p});

  std::vector<PairErrors> errors(tasks.size());
  parallel_for(tasks.size(), config.jobs, [&](size_t i) {
    const Task& t = tasks[i];
    const TunedMethod& m = methods[t.method];
    const TestCase& tc = *pairs[t.pair].tc;
    // The seed ignores the budget so that sweep entries share their random
    // sequence and differ only by the iteration cap.
    EstimatorConfig ec = make_estimator_config(
        m.method, m.inlier_threshold_px, m.snn_threshold,
        config.test_sweep[t.budget], pair_seed(config, m.method, tc.id));
    errors[i] = evaluate_pair(tc, estimate(tc.corrs, ec));
  });

  TestReport report;
  for (size_t m = 0; m < methods.size(); ++m) {
    for (size_t b = 0; b < config.test_sweep.size(); ++b) {
      const size_t base = (m * config.test_sweep.size() + b) * pairs.size();
      SweepSummary s = summarize_split(
          pairs, {errors.data() + base, pairs.size()}, dataset.scenes.size());
      TestRow row;
      row.method = methods[m].method;
      row.max_iterations = config.test_sweep[b];
      row.rot_maa = s.rot_maa;
      row.trans_maa = s.trans_maa;
      row.combined_maa = s.combined_maa;
      row.abs_trans_maa = s.abs_trans_maa;
      row.reproj_maa = s.reproj_maa;
      row.median_inliers = s.median_inliers;
      row.median_time_s = s.median_time_s;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::string test_report_csv(const TestReport& report, bool include_timing) {
  std::string out =
      "method,max_iter,rot_mAA,trans_mAA,combined_mAA,abs_trans_mAA,"
      "reproj_mAA,median_inliers";
  if (include_timing) out += ",median_time_s";
  out += "\n";
  for (const TestRow& r : report.rows) {
    out += r.method + "," + std::to_string(r.max_iterations) + "," +
           fmt(r.rot_maa) + "," + fmt(r.trans_maa) + "," +
           fmt(r.combined_maa) + "," + fmt(r.abs_trans_maa) + "," +
           fmt(r.reproj_maa) + "," + fmt(r.median_inliers);
    if (include_timing) out += "," + fmt(r.median_time_s);
    out += "\n";
  }
  return out;
}

UncertaintyReport run_uncertainty(const Dataset& dataset,
                                  const StatsFilters& filters, int jobs) {
  std::vector<SplitPair> pairs;
  for (size_t s = 0; s < dataset.scenes.size(); ++s)
    for (const TestCase& tc : dataset.scenes[s].pairs)
      pairs.push_back({s, &tc});
  if (pairs.empty()) throw InvalidInput("dataset has no pairs");

  std::vector<StatsAccumulator> partial(pairs.size(), StatsAccumulator(filters));
  parallel_for(pairs.size(), jobs, [&](size_t i) {
    const TestCase& tc = *pairs[i].tc;
    Homography h = tc.pixel_homography();
    for (int idx : tc.inlier_indices)
      partial[i].add(compute_residuals(tc.corrs[idx], h));
  });

  // Merge in dataset order so reports do not depend on scheduling.
  UncertaintyReport report;
  StatsAccumulator global(filters);
  std::vector<std::string> names = scene_names(dataset);
  std::map<std::string, StatsAccumulator> per_scene;
  for (size_t i = 0; i < pairs.size(); ++i) {
    global.merge(partial[i]);
    auto [it, inserted] = per_scene.try_emplace(names[pairs[i].scene],
                                                StatsAccumulator(filters));
    it->second.merge(partial[i]);
  }
  report.global = global.report();
  for (const auto& [name, acc] : per_scene)
    report.per_scene.emplace(name, acc.report());
  return report;
}

std::string stats_report_json(const StatsReport& report) {
  njson root;
  root["total"] = report.total;
  root["kept"] = report.kept;
  root["filters"] = {{"cond_max", report.filters.cond_max},
                     {"r_tilde_min", report.filters.r_tilde_min},
                     {"r_tilde_max", report.filters.r_tilde_max}};
  njson channels;
  for (const auto& [name, ch] : report.channels)
    channels[name] = {
        {"count", ch.count}, {"mean", ch.mean}, {"stddev", ch.stddev}};
  root["channels"] = std::move(channels);
  njson histograms;
  for (const auto& [name, bins] : report.histograms) {
    njson arr = njson::array();
    for (const HistogramBin& b : bins)
      arr.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}});
    histograms[name] = std::move(arr);
  }
  root["histograms"] = std::move(histograms);
  njson scale_bins = njson::array();
  for (const ScaleBinStats& sb : report.scale_bins)
    scale_bins.push_back({{"s1_lo", sb.s1_lo},
                          {"s1_hi", sb.s1_hi},
                          {"s2_lo", sb.s2_lo},
                          {"s2_hi", sb.s2_hi},
                          {"count", sb.count},
                          {"eps_x_std", sb.eps_x_std}});
  root["scale_bins"] = std::move(scale_bins);
  return root.dump(2) + "\n";
}

std::string histogram_csv(const StatsReport& report,
                          const std::string& channel) {
  auto it = report.histograms.find(channel);
  if (it == report.histograms.end())
    throw InvalidInput("no histogram for channel '" + channel + "'");
  std::string out = "lo,hi,count\n";
  for (const HistogramBin& b : it->second)
    out += fmt(b.lo) + "," + fmt(b.hi) + "," + std::to_string(b.count) + "\n";
  return out;
}

CovestReport run_covest(const Dataset& dataset, double base_sigma,
                        const ProtocolConfig& config) {
  config.validate();
  if (!(base_sigma > 0)) throw InvalidInput("base sigma must be positive");
  std::vector<SplitPair> pairs;
  for (size_t s = 0; s < dataset.scenes.size(); ++s)
    for (const TestCase& tc : dataset.scenes[s].pairs)
      pairs.push_back({s, &tc});
  if (pairs.empty()) throw InvalidInput("dataset has no pairs");

  // 2I - 8 >= 2 keeps the variance factor meaningful.
  constexpr int kMinInliers = 5;
  std::vector<int> usable;
  int skipped = 0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (static_cast<int>(pairs[i].tc->inlier_indices.size()) >= kMinInliers)
      usable.push_back(static_cast<int>(i));
    else
      ++skipped;
  }

  std::vector<CovestRow> rows(usable.size());
  std::vector<std::string> names = scene_names(dataset);
  parallel_for(usable.size(), config.jobs, [&](size_t u) {
    const SplitPair& sp = pairs[usable[u]];
    const TestCase& tc = *sp.tc;
    std::vector<Correspondence> inliers;
    inliers.reserve(tc.inlier_indices.size());
    for (int idx : tc.inlier_indices) inliers.push_back(tc.corrs[idx]);

    CompareFour cf =
        compare_four(inliers, tc.pixel_homography(), base_sigma);
    std::vector<PointNoise> scale_noise = scheme_noise(
        inliers, WeightScheme{WeightSchemeKind::scale}, base_sigma);
    double lo = kInf, hi = -kInf;
    for (const PointNoise& pn : scale_noise) {
      lo = std::min({lo, pn.sigma1, pn.sigma2});
      hi = std::max({hi, pn.sigma1, pn.sigma2});
    }

    CovestRow& row = rows[u];
    row.scene = names[sp.scene];
    row.pair_id = tc.id;
    row.num_inliers = static_cast<int>(inliers.size());
    row.sigma_min = lo;
    row.sigma_max = hi;
    row.sigma0_equal = cf.sigma0_equal;
    row.sigma0_scale = cf.sigma0_scale;
    row.l_mean_alg_ml = cf.alg_vs_ml.l_mean;
    row.l_max_alg_ml = cf.alg_vs_ml.l_max;
    row.l_mean_equal_scale = cf.equal_vs_scale.l_mean;
    row.l_max_equal_scale = cf.equal_vs_scale.l_max;
    row.rmse_ref = cf.rows[0].rmse;
    row.rmse_alg = cf.rows[1].rmse;
    row.rmse_ml_equal = cf.rows[2].rmse;
    row.rmse_ml_scale = cf.rows[3].rmse;
    row.rmse_w_ref = cf.rows[0].rmse_w;
    row.rmse_w_alg = cf.rows[1].rmse_w;
    row.rmse_w_ml_equal = cf.rows[2].rmse_w;
    row.rmse_w_ml_scale = cf.rows[3].rmse_w;
  });

  CovestReport report;
  report.rows = std::move(rows);
  report.skipped = skipped;
  if (report.rows.empty())
    throw InvalidInput("no pair has enough inliers for covariance comparison");

  auto fields = [](CovestRow& r) {
    return std::array<double*, 16>{
        &r.sigma_min,         &r.sigma_max,        &r.sigma0_equal,
        &r.sigma0_scale,      &r.l_mean_alg_ml,    &r.l_max_alg_ml,
        &r.l_mean_equal_scale, &r.l_max_equal_scale, &r.rmse_ref,
        &r.rmse_alg,          &r.rmse_ml_equal,    &r.rmse_ml_scale,
        &r.rmse_w_ref,        &r.rmse_w_alg,       &r.rmse_w_ml_equal,
        &r.rmse_w_ml_scale};
  };
  report.mean.scene = "(mean)";
  report.max = report.rows.front();
  report.max.scene = "(max)";
  report.max.pair_id = "";
  auto mean_fields = fields(report.mean);
  auto max_fields = fields(report.max);
  for (double* p : mean_fields) *p = 0;
  double inlier_sum = 0;
  for (CovestRow& r : report.rows) {
    auto rf = fields(r);
    for (size_t k = 0; k < rf.size(); ++k) {
      *mean_fields[k] += *rf[k] / static_cast<double>(report.rows.size());
      *max_fields[k] = std::max(*max_fields[k], *rf[k]);
    }
    inlier_sum += r.num_inliers;
  }
  report.mean.num_inliers = static_cast<int>(
      std::lround(inlier_sum / static_cast<double>(report.rows.size())));
  report.max.num_inliers = 0;
  for (const CovestRow& r : report.rows)
    report.max.num_inliers = std::max(report.max.num_inliers, r.num_inliers);
  return report;
}

std::string covest_report_csv(const CovestReport& report) {
  std::string out =
      "scene,pair,num_inliers,sigma_min,sigma_max,sigma0_equal,sigma0_scale,"
      "l_mean_alg_ml,l_max_alg_ml,l_mean_equal_scale,l_max_equal_scale,"
      "rmse_ref,rmse_alg,rmse_ml_equal,rmse_ml_scale,"
      "rmse_w_ref,rmse_w_alg,rmse_w_ml_equal,rmse_w_ml_scale\n";
  auto row_csv = [&](const CovestRow& r) {
    out += r.scene + "," + r.pair_id + "," + std::to_string(r.num_inliers) +
           "," + fmt(r.sigma_min) + "," + fmt(r.sigma_max) + "," +
           fmt(r.sigma0_equal) + "," + fmt(r.sigma0_scale) + "," +
           fmt(r.l_mean_alg_ml) + "," + fmt(r.l_max_alg_ml) + "," +
           fmt(r.l_mean_equal_scale) + "," + fmt(r.l_max_equal_scale) + "," +
           fmt(r.rmse_ref) + "," + fmt(r.rmse_alg) + "," +
           fmt(r.rmse_ml_equal) + "," + fmt(r.rmse_ml_scale) + "," +
           fmt(r.rmse_w_ref) + "," + fmt(r.rmse_w_alg) + "," +
           fmt(r.rmse_w_ml_equal) + "," + fmt(r.rmse_w_ml_scale) + "\n";
  };
  for (const CovestRow& r : report.rows) row_csv(r);
  row_csv(report.mean);
  row_csv(report.max);
  return out;
}

}  // namespace homkit
