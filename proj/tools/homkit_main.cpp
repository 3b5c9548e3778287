// Command-line front end: dataset synthesis, ground-truth validation,
// hyperparameter training, benchmark runs, uncertainty and covariance
// reports. Every failure is reported as a one-line JSON envelope on stderr
// with a stable `type` tag so callers can dispatch on it.

#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "homkit/dataset.hpp"
#include "homkit/errors.hpp"
#include "homkit/parallel.hpp"
#include "homkit/protocol.hpp"
#include "homkit/synth.hpp"

namespace {

using njson = nlohmann::ordered_json;
using namespace homkit;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidInput("cannot open file for writing: " + path);
  out << content;
  if (!out) throw InvalidInput("failed to write file: " + path);
}

njson parse_json_file(const std::string& path) {
  try {
    return njson::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

template <typename T>
void maybe_get(const njson& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j[key].get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config key '") + key + "': " + e.what());
  }
}

void apply_scene_config(SceneConfig& sc, const njson& j) {
  maybe_get(j, "image_width", sc.image_width);
  maybe_get(j, "image_height", sc.image_height);
  maybe_get(j, "focal_px", sc.focal_px);
  maybe_get(j, "num_planes", sc.num_planes);
  maybe_get(j, "points_per_plane", sc.points_per_plane);
  maybe_get(j, "noise_px", sc.noise_px);
  maybe_get(j, "outlier_fraction", sc.outlier_fraction);
  maybe_get(j, "baseline_min_m", sc.baseline_min_m);
  maybe_get(j, "baseline_max_m", sc.baseline_max_m);
  maybe_get(j, "rotation_max_deg", sc.rotation_max_deg);
  maybe_get(j, "depth_min_m", sc.depth_min_m);
  maybe_get(j, "depth_max_m", sc.depth_max_m);
  maybe_get(j, "patch_radius_m", sc.patch_radius_m);
  maybe_get(j, "plane_tilt_max_deg", sc.plane_tilt_max_deg);
  maybe_get(j, "epsilon_px", sc.epsilon_px);
  maybe_get(j, "sift_angle_noise_deg", sc.sift_angle_noise_deg);
  maybe_get(j, "sift_scale_log_noise", sc.sift_scale_log_noise);
}

void apply_protocol_config(ProtocolConfig& pc, const njson& j) {
  maybe_get(j, "theta_grid", pc.theta_grid);
  maybe_get(j, "snn_grid", pc.snn_grid);
  maybe_get(j, "train_iterations", pc.train_iterations);
  maybe_get(j, "test_sweep", pc.test_sweep);
  maybe_get(j, "seed", pc.seed);
  maybe_get(j, "jobs", pc.jobs);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

const char* failure_name(ValidationFailure f) {
  switch (f) {
    case ValidationFailure::none: return "none";
    case ValidationFailure::too_few_inliers: return "too_few_inliers";
    case ValidationFailure::degenerate: return "degenerate";
    case ValidationFailure::pose_mismatch: return "pose_mismatch";
  }
  return "unknown";
}

struct SynthArgs {
  std::string out;
  std::string config;
  int scenes = 10;
  std::uint64_t seed = 0;
  double train_fraction = 0.2;
  bool binary = false;
  int jobs = 1;
};

int cmd_synth(const SynthArgs& args) {
  SceneConfig base;
  if (!args.config.empty()) apply_scene_config(base, parse_json_file(args.config));
  if (args.scenes < 1) throw InvalidInput("--scenes must be >= 1");
  if (args.train_fraction < 0 || args.train_fraction > 1)
    throw InvalidInput("--train-fraction must be in [0, 1]");

  const int train_count =
      static_cast<int>(std::lround(args.train_fraction * args.scenes));
  std::vector<DatasetScene> scenes(args.scenes);
  parallel_for(static_cast<size_t>(args.scenes), args.jobs, [&](size_t i) {
    SceneConfig cfg = base;
    cfg.seed = derive_seed(args.seed, i);
    SceneData data = generate_scene(cfg);
    DatasetScene scene;
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%04zu", i);
    scene.name = name;
    scene.pairs = std::move(data.cases);
    if (static_cast<int>(i) < train_count)
      for (TestCase& tc : scene.pairs) tc.split = "train";
    scenes[i] = std::move(scene);
  });

  Dataset ds;
  ds.scenes = std::move(scenes);
  save_dataset(ds, args.out, args.binary);

  int pairs = 0, train_pairs = 0;
  for (const DatasetScene& s : ds.scenes)
    for (const TestCase& tc : s.pairs) {
      ++pairs;
      if (tc.split == "train") ++train_pairs;
    }
  njson summary;
  summary["scenes"] = ds.scenes.size();
  summary["pairs"] = pairs;
  summary["train_pairs"] = train_pairs;
  summary["out"] = args.out;
  std::cout << summary.dump(2) << "\n";
  return 0;
}

struct ValidateArgs {
  std::string dataset;
  std::string out;
  ValidationConfig vc;
  int jobs = 1;
};

int cmd_validate(const ValidateArgs& args) {
  LoadResult loaded = load_dataset(args.dataset);
  struct Ref {
    const std::string* scene;
    const TestCase* tc;
  };
  std::vector<Ref> refs;
  for (const DatasetScene& s : loaded.dataset.scenes)
    for (const TestCase& tc : s.pairs) refs.push_back({&s.name, &tc});

  std::vector<ValidationResult> results(refs.size());
  parallel_for(refs.size(), args.jobs, [&](size_t i) {
    results[i] = validate_homography(*refs[i].tc, args.vc);
  });

  njson rejected = njson::array();
  int accepted = 0;
  for (size_t i = 0; i < refs.size(); ++i) {
    if (results[i].accepted) {
      ++accepted;
      continue;
    }
    njson r;
    r["scene"] = *refs[i].scene;
    r["pair"] = refs[i].tc->id;
    r["reason"] = failure_name(results[i].failure);
    r["inlier_count"] = results[i].inlier_count;
    r["rot_err_deg"] = results[i].rot_err_deg;
    r["trans_err_deg"] = results[i].trans_err_deg;
    rejected.push_back(std::move(r));
  }
  njson quarantined = njson::array();
  for (const QuarantineEntry& q : loaded.quarantined)
    quarantined.push_back(
        {{"scene", q.scene}, {"pair", q.pair_id}, {"reason", q.reason}});

  njson summary;
  summary["pairs"] = refs.size();
  summary["accepted"] = accepted;
  summary["rejected"] = std::move(rejected);
  summary["quarantined"] = std::move(quarantined);
  std::string text = summary.dump(2) + "\n";
  if (!args.out.empty())
    write_file(args.out, text);
  else
    std::cout << text;
  return (accepted == static_cast<int>(refs.size()) &&
          loaded.quarantined.empty())
             ? 0
             : 1;
}

struct TrainArgs {
  std::string dataset;
  std::string out;
  std::string grid_out;
  std::string config;
  std::string methods;
  ProtocolConfig pc;
  bool seed_given = false;
  bool jobs_given = false;
  bool iterations_given = false;
};

int cmd_train(const TrainArgs& args) {
  ProtocolConfig pc = args.pc;
  if (!args.config.empty()) {
    ProtocolConfig from_file;
    apply_protocol_config(from_file, parse_json_file(args.config));
    // Explicit flags win over the config file for seed/jobs/iterations.
    if (args.seed_given) from_file.seed = pc.seed;
    if (args.jobs_given) from_file.jobs = pc.jobs;
    if (args.iterations_given) from_file.train_iterations = pc.train_iterations;
    pc = from_file;
  }
  std::vector<std::string> methods = args.methods.empty()
                                         ? method_names()
                                         : split_csv(args.methods);
  LoadResult loaded = load_dataset(args.dataset);
  std::vector<TrainReport> reports = run_training(loaded.dataset, methods, pc);

  std::vector<TunedMethod> tuned;
  for (const TrainReport& r : reports) tuned.push_back(r.best);
  std::string tuned_json = tuned_methods_to_json(tuned);
  if (!args.out.empty())
    write_file(args.out, tuned_json);
  else
    std::cout << tuned_json;
  if (!args.grid_out.empty())
    write_file(args.grid_out, train_reports_to_json(reports));
  return 0;
}

struct TestArgs {
  std::string dataset;
  std::string tuned;
  std::string out;
  std::string config;
  std::string sweep;
  ProtocolConfig pc;
  bool no_timing = false;
  bool seed_given = false;
  bool jobs_given = false;
};

int cmd_test(const TestArgs& args) {
  ProtocolConfig pc = args.pc;
  if (!args.config.empty()) {
    ProtocolConfig from_file;
    apply_protocol_config(from_file, parse_json_file(args.config));
    if (args.seed_given) from_file.seed = pc.seed;
    if (args.jobs_given) from_file.jobs = pc.jobs;
    pc = from_file;
  }
  if (!args.sweep.empty()) {
    pc.test_sweep.clear();
    for (const std::string& s : split_csv(args.sweep))
      pc.test_sweep.push_back(std::stoi(s));
  }
  std::vector<TunedMethod> tuned = tuned_methods_from_json(read_file(args.tuned));
  LoadResult loaded = load_dataset(args.dataset);
  TestReport report = run_test(loaded.dataset, tuned, pc);
  std::string csv = test_report_csv(report, !args.no_timing);
  if (!args.out.empty())
    write_file(args.out, csv);
  else
    std::cout << csv;
  return 0;
}

struct UncertArgs {
  std::string dataset;
  std::string out;
  std::string hist_dir;
  StatsFilters filters;
  int jobs = 1;
};

int cmd_uncert(const UncertArgs& args) {
  LoadResult loaded = load_dataset(args.dataset);
  UncertaintyReport report = run_uncertainty(loaded.dataset, args.filters, args.jobs);

  njson root;
  root["global"] = njson::parse(stats_report_json(report.global));
  njson scenes;
  for (const auto& [name, sr] : report.per_scene)
    scenes[name] = njson::parse(stats_report_json(sr));
  root["scenes"] = std::move(scenes);
  std::string text = root.dump(2) + "\n";
  if (!args.out.empty())
    write_file(args.out, text);
  else
    std::cout << text;

  if (!args.hist_dir.empty()) {
    std::filesystem::create_directories(args.hist_dir);
    for (const auto& [name, bins] : report.global.histograms) {
      (void)bins;
      write_file((std::filesystem::path(args.hist_dir) / (name + ".csv")).string(),
                 histogram_csv(report.global, name));
    }
  }
  return 0;
}

struct CovestArgs {
  std::string dataset;
  std::string out;
  double sigma = 1.0;
  int jobs = 1;
};

int cmd_covest(const CovestArgs& args) {
  ProtocolConfig pc;
  pc.jobs = args.jobs;
  LoadResult loaded = load_dataset(args.dataset);
  CovestReport report = run_covest(loaded.dataset, args.sigma, pc);
  std::string csv = covest_report_csv(report);
  if (!args.out.empty())
    write_file(args.out, csv);
  else
    std::cout << csv;
  return 0;
}

struct ReportArgs {
  std::string test_csv;
  std::string out;
  std::string title = "Benchmark results";
};

// Renders the benchmark CSV as a Markdown table.
int cmd_report(const ReportArgs& args) {
  std::istringstream in(read_file(args.test_csv));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(split_csv(line));
  }
  if (rows.empty()) throw InvalidInput("empty csv: " + args.test_csv);
  std::ostringstream md;
  md << "# " << args.title << "\n\n";
  md << "|";
  for (const std::string& h : rows[0]) md << " " << h << " |";
  md << "\n|";
  for (size_t i = 0; i < rows[0].size(); ++i) md << " --- |";
  md << "\n";
  for (size_t r = 1; r < rows.size(); ++r) {
    md << "|";
    for (const std::string& c : rows[r]) md << " " << c << " |";
    md << "\n";
  }
  if (!args.out.empty())
    write_file(args.out, md.str());
  else
    std::cout << md.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar two-view benchmark toolkit"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--out", synth_args.out, "Output dataset JSON")->required();
  synth->add_option("--scenes", synth_args.scenes, "Number of scenes");
  synth->add_option("--seed", synth_args.seed, "Base seed");
  synth->add_option("--train-fraction", synth_args.train_fraction,
                    "Fraction of scenes tagged as training split");
  synth->add_option("--config", synth_args.config, "Scene config JSON file");
  synth->add_flag("--binary", synth_args.binary,
                  "Store correspondences in a packed binary sidecar");
  synth->add_option("--jobs", synth_args.jobs, "Worker threads");

  ValidateArgs validate_args;
  CLI::App* validate =
      app.add_subcommand("validate", "Check dataset ground truth");
  validate->add_option("--dataset", validate_args.dataset, "Dataset JSON")
      ->required();
  validate->add_option("--out", validate_args.out, "Report JSON (default stdout)");
  validate->add_option("--epsilon", validate_args.vc.epsilon_px,
                       "Inlier gate in pixels");
  validate->add_option("--min-inliers", validate_args.vc.min_inliers,
                       "Minimum inliers per pair");
  validate->add_option("--max-rot", validate_args.vc.max_rot_err_deg,
                       "Maximum rotation error (degrees)");
  validate->add_option("--max-trans", validate_args.vc.max_trans_err_deg,
                       "Maximum translation direction error (degrees)");
  validate->add_option("--jobs", validate_args.jobs, "Worker threads");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Tune method hyperparameters");
  train->add_option("--dataset", train_args.dataset, "Dataset JSON")->required();
  train->add_option("--out", train_args.out, "Tuned methods JSON (default stdout)");
  train->add_option("--grid-out", train_args.grid_out, "Full grid table JSON");
  train->add_option("--config", train_args.config, "Protocol config JSON file");
  train->add_option("--methods", train_args.methods,
                    "Comma-separated method names (default: all)");
  train->add_option("--iterations", train_args.pc.train_iterations,
                    "Training iteration budget");
  train->add_option("--seed", train_args.pc.seed, "Protocol seed");
  train->add_option("--jobs", train_args.pc.jobs, "Worker threads");

  TestArgs test_args;
  CLI::App* test = app.add_subcommand("test", "Run the benchmark sweep");
  test->add_option("--dataset", test_args.dataset, "Dataset JSON")->required();
  test->add_option("--tuned", test_args.tuned, "Tuned methods JSON from train")
      ->required();
  test->add_option("--out", test_args.out, "Results CSV (default stdout)");
  test->add_option("--config", test_args.config, "Protocol config JSON file");
  test->add_option("--sweep", test_args.sweep,
                   "Comma-separated iteration budgets");
  test->add_option("--seed", test_args.pc.seed, "Protocol seed");
  test->add_option("--jobs", test_args.pc.jobs, "Worker threads");
  test->add_flag("--no-timing", test_args.no_timing,
                 "Drop the timing column (byte-stable output)");

  UncertArgs uncert_args;
  CLI::App* uncert =
      app.add_subcommand("uncert", "Keypoint residual statistics");
  uncert->add_option("--dataset", uncert_args.dataset, "Dataset JSON")->required();
  uncert->add_option("--out", uncert_args.out, "Report JSON (default stdout)");
  uncert->add_option("--hist-dir", uncert_args.hist_dir,
                     "Directory for per-channel histogram CSVs");
  uncert->add_option("--cond-max", uncert_args.filters.cond_max,
                     "Condition number filter");
  uncert->add_option("--rtilde-min", uncert_args.filters.r_tilde_min,
                     "Lower scale-ratio filter");
  uncert->add_option("--rtilde-max", uncert_args.filters.r_tilde_max,
                     "Upper scale-ratio filter");
  uncert->add_option("--jobs", uncert_args.jobs, "Worker threads");

  CovestArgs covest_args;
  CLI::App* covest =
      app.add_subcommand("covest", "Covariance comparison of the fits");
  covest->add_option("--dataset", covest_args.dataset, "Dataset JSON")->required();
  covest->add_option("--out", covest_args.out, "Report CSV (default stdout)");
  covest->add_option("--sigma", covest_args.sigma, "Base noise sigma (pixels)");
  covest->add_option("--jobs", covest_args.jobs, "Worker threads");

  ReportArgs report_args;
  CLI::App* report =
      app.add_subcommand("report", "Render a results CSV as Markdown");
  report->add_option("--test-csv", report_args.test_csv, "Input CSV")->required();
  report->add_option("--out", report_args.out, "Output Markdown (default stdout)");
  report->add_option("--title", report_args.title, "Report title");

  std::string import_path;
  CLI::App* import_cmd =
      app.add_subcommand("import", "Import an external benchmark archive");
  import_cmd->add_option("--input", import_path, "Archive path")->required();

  CLI11_PARSE(app, argc, argv);
  train_args.seed_given = train->count("--seed") > 0;
  train_args.jobs_given = train->count("--jobs") > 0;
  train_args.iterations_given = train->count("--iterations") > 0;
  test_args.seed_given = test->count("--seed") > 0;
  test_args.jobs_given = test->count("--jobs") > 0;

  try {
    if (app.got_subcommand(synth)) return cmd_synth(synth_args);
    if (app.got_subcommand(validate)) return cmd_validate(validate_args);
    if (app.got_subcommand(train)) return cmd_train(train_args);
    if (app.got_subcommand(test)) return cmd_test(test_args);
    if (app.got_subcommand(uncert)) return cmd_uncert(uncert_args);
    if (app.got_subcommand(covest)) return cmd_covest(covest_args);
    if (app.got_subcommand(report)) return cmd_report(report_args);
    if (app.got_subcommand(import_cmd)) {
      import_external(import_path);
      return 0;
    }
  } catch (const Error& e) {
    njson err;
    err["error"] = {{"type", e.kind()}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    njson err;
    err["error"] = {{"type", "internal"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 2;
  }
  return 0;
}
