#include "homkit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "homkit/errors.hpp"

namespace homkit {

namespace {

using njson = nlohmann::ordered_json;

constexpr int kSupportedVersion = 1;

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what);
}

double require_number(const njson& j, const std::string& where) {
  if (!j.is_number()) parse_fail(where, "expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) parse_fail(where, "value is not finite");
  return v;
}

const njson& require_key(const njson& j, const char* key,
                         const std::string& where) {
  if (!j.is_object()) parse_fail(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) parse_fail(where, std::string("missing key '") + key + "'");
  return *it;
}

njson matrix3_to_json(const Eigen::Matrix3d& m) {
  njson rows = njson::array();
  for (int r = 0; r < 3; ++r)
    rows.push_back(njson::array({m(r, 0), m(r, 1), m(r, 2)}));
  return rows;
}

Eigen::Matrix3d matrix3_from_json(const njson& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) parse_fail(where, "expected 3 rows");
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) {
    const njson& row = j[r];
    if (!row.is_array() || row.size() != 3)
      parse_fail(where, "expected rows of 3 numbers");
    for (int c = 0; c < 3; ++c)
      m(r, c) = require_number(row[c], where);
  }
  return m;
}

njson vector3_to_json(const Eigen::Vector3d& v) {
  return njson::array({v.x(), v.y(), v.z()});
}

Eigen::Vector3d vector3_from_json(const njson& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) parse_fail(where, "expected 3 numbers");
  return {require_number(j[0], where), require_number(j[1], where),
          require_number(j[2], where)};
}

// Flattened correspondence layout used by both the JSON arrays and the
// binary sidecar: 9 values without a match score, 10 with one.
std::vector<double> corr_row(const Correspondence& c) {
  std::vector<double> row{c.x1, c.y1, c.phi1, c.s1, c.x2,
                          c.y2, c.phi2, c.s2, c.snn};
  if (c.score) row.push_back(*c.score);
  return row;
}

Correspondence corr_from_row(const double* v, size_t cols,
                             const std::string& where) {
  Correspondence c;
  c.x1 = v[0];
  c.y1 = v[1];
  c.phi1 = v[2];
  c.s1 = v[3];
  c.x2 = v[4];
  c.y2 = v[5];
  c.phi2 = v[6];
  c.s2 = v[7];
  c.snn = v[8];
  if (cols == 10) c.score = v[9];
  for (size_t k = 0; k < cols; ++k)
    if (!std::isfinite(v[k])) parse_fail(where, "value is not finite");
  return c;
}

size_t pair_columns(const TestCase& tc, const std::string& where) {
  if (tc.corrs.empty()) return 9;
  bool scored = tc.corrs.front().score.has_value();
  for (const Correspondence& c : tc.corrs)
    if (c.score.has_value() != scored)
      throw InvalidInput(where + ": mixed scored and unscored correspondences");
  return scored ? 10 : 9;
}

njson pair_to_json(const TestCase& tc, const std::string& where,
                   std::ofstream* sidecar, const std::string& sidecar_name,
                   uint64_t* sidecar_offset) {
  njson j;
  j["id"] = tc.id;
  j["split"] = tc.split;
  j["scale_m"] = tc.scale_m;
  j["epsilon_px"] = tc.epsilon_px;
  j["k1"] = matrix3_to_json(tc.k1);
  j["k2"] = matrix3_to_json(tc.k2);
  j["rotation"] = matrix3_to_json(tc.rel_pose.rotation.matrix());
  j["translation"] = vector3_to_json(tc.rel_pose.translation);
  j["h_norm"] = matrix3_to_json(tc.h_norm.matrix());
  j["inliers"] = tc.inlier_indices;
  size_t cols = pair_columns(tc, where);
  if (sidecar) {
    for (const Correspondence& c : tc.corrs) {
      std::vector<double> row = corr_row(c);
      sidecar->write(reinterpret_cast<const char*>(row.data()),
                     static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
    njson ref;
    ref["file"] = sidecar_name;
    ref["offset"] = *sidecar_offset;
    ref["rows"] = tc.corrs.size();
    ref["cols"] = cols;
    j["correspondences_ref"] = ref;
    *sidecar_offset += tc.corrs.size() * cols * sizeof(double);
  } else {
    njson rows = njson::array();
    for (const Correspondence& c : tc.corrs) rows.push_back(corr_row(c));
    j["correspondences"] = rows;
  }
  return j;
}

std::vector<Correspondence> corrs_from_json(const njson& j,
                                            const std::string& where) {
  if (!j.is_array()) parse_fail(where, "expected an array of rows");
  std::vector<Correspondence> corrs;
  corrs.reserve(j.size());
  std::optional<size_t> cols;
  for (size_t i = 0; i < j.size(); ++i) {
    const njson& row = j[i];
    std::string row_where = where + "[" + std::to_string(i) + "]";
    if (!row.is_array() || (row.size() != 9 && row.size() != 10))
      parse_fail(row_where, "expected 9 or 10 numbers");
    if (cols && *cols != row.size())
      parse_fail(row_where, "rows have inconsistent column counts");
    cols = row.size();
    std::vector<double> v(row.size());
    for (size_t k = 0; k < row.size(); ++k)
      v[k] = require_number(row[k], row_where);
    corrs.push_back(corr_from_row(v.data(), v.size(), row_where));
  }
  return corrs;
}

// Lazily loaded packed sidecar files, resolved relative to the JSON document.
struct SidecarCache {
  std::filesystem::path base_dir;
  std::map<std::string, std::vector<double>> files;

  const std::vector<double>& get(const std::string& name,
                                 const std::string& where) {
    auto it = files.find(name);
    if (it != files.end()) return it->second;
    std::filesystem::path p = base_dir / name;
    std::ifstream in(p, std::ios::binary);
    if (!in) parse_fail(where, "cannot open sidecar file " + p.string());
    in.seekg(0, std::ios::end);
    std::streamoff bytes = in.tellg();
    in.seekg(0);
    if (bytes < 0 || bytes % sizeof(double) != 0)
      parse_fail(where, "sidecar size is not a multiple of 8 bytes");
    std::vector<double> data(static_cast<size_t>(bytes) / sizeof(double));
    in.read(reinterpret_cast<char*>(data.data()), bytes);
    if (!in) parse_fail(where, "short read from sidecar file " + p.string());
    return files.emplace(name, std::move(data)).first->second;
  }
};

std::vector<Correspondence> corrs_from_ref(const njson& ref,
                                           SidecarCache& cache,
                                           const std::string& where) {
  std::string file = require_key(ref, "file", where).get<std::string>();
  uint64_t offset = require_key(ref, "offset", where).get<uint64_t>();
  uint64_t rows = require_key(ref, "rows", where).get<uint64_t>();
  uint64_t cols = require_key(ref, "cols", where).get<uint64_t>();
  if (cols != 9 && cols != 10) parse_fail(where, "cols must be 9 or 10");
  if (offset % sizeof(double) != 0)
    parse_fail(where, "offset must be 8-byte aligned");
  const std::vector<double>& data = cache.get(file, where);
  uint64_t begin = offset / sizeof(double);
  if (begin + rows * cols > data.size())
    parse_fail(where, "reference reaches past the end of the sidecar");
  std::vector<Correspondence> corrs;
  corrs.reserve(rows);
  for (uint64_t r = 0; r < rows; ++r)
    corrs.push_back(corr_from_row(data.data() + begin + r * cols, cols, where));
  return corrs;
}

TestCase pair_from_json(const njson& j, SidecarCache& cache,
                        const std::string& where) {
  TestCase tc;
  const njson& id = require_key(j, "id", where);
  if (!id.is_string()) parse_fail(where + ".id", "expected a string");
  tc.id = id.get<std::string>();
  const njson& split = require_key(j, "split", where);
  if (!split.is_string()) parse_fail(where + ".split", "expected a string");
  tc.split = split.get<std::string>();
  if (tc.split != "train" && tc.split != "test")
    throw InvalidInput(where + ".split: must be 'train' or 'test'");
  tc.scale_m = require_number(require_key(j, "scale_m", where), where + ".scale_m");
  tc.epsilon_px =
      require_number(require_key(j, "epsilon_px", where), where + ".epsilon_px");
  if (!(tc.scale_m > 0))
    throw InvalidInput(where + ".scale_m: must be positive");
  if (!(tc.epsilon_px > 0))
    throw InvalidInput(where + ".epsilon_px: must be positive");
  tc.k1 = matrix3_from_json(require_key(j, "k1", where), where + ".k1");
  tc.k2 = matrix3_from_json(require_key(j, "k2", where), where + ".k2");
  Eigen::Matrix3d r =
      matrix3_from_json(require_key(j, "rotation", where), where + ".rotation");
  try {
    tc.rel_pose.rotation = Rotation3::from_matrix(r);
  } catch (const Error& e) {
    throw InvalidInput(where + ".rotation: " + e.what());
  }
  tc.rel_pose.translation =
      vector3_from_json(require_key(j, "translation", where), where + ".translation");
  const Eigen::Matrix3d hm =
      matrix3_from_json(require_key(j, "h_norm", where), where + ".h_norm");
  try {
    tc.h_norm = Homography::from_matrix(hm);
  } catch (const Error& e) {
    throw InvalidInput(where + ".h_norm: " + e.what());
  }

  const njson* corrs = j.contains("correspondences") ? &j["correspondences"] : nullptr;
  const njson* ref =
      j.contains("correspondences_ref") ? &j["correspondences_ref"] : nullptr;
  if ((corrs != nullptr) == (ref != nullptr))
    parse_fail(where, "need exactly one of correspondences, correspondences_ref");
  tc.corrs = corrs ? corrs_from_json(*corrs, where + ".correspondences")
                   : corrs_from_ref(*ref, cache, where + ".correspondences_ref");

  const njson& inl = require_key(j, "inliers", where);
  if (!inl.is_array()) parse_fail(where + ".inliers", "expected an array");
  tc.inlier_indices.reserve(inl.size());
  for (const njson& v : inl) {
    if (!v.is_number_integer())
      parse_fail(where + ".inliers", "expected integer indices");
    long long idx = v.get<long long>();
    if (idx < 0 || idx >= static_cast<long long>(tc.corrs.size()))
      throw InvalidInput(where + ".inliers: index out of range");
    if (!tc.inlier_indices.empty() &&
        static_cast<long long>(tc.inlier_indices.back()) >= idx)
      throw InvalidInput(where + ".inliers: indices must be strictly increasing");
    tc.inlier_indices.push_back(static_cast<int>(idx));
  }
  return tc;
}

// Data-quality check behind quarantine: every listed inlier must satisfy the
// pair's own reprojection tolerance under the pixel-space ground truth.
std::optional<std::string> ground_truth_issue(const TestCase& tc) {
  Homography h = tc.pixel_homography();
  for (int idx : tc.inlier_indices) {
    const Correspondence& c = tc.corrs[idx];
    try {
      double err = (c.p2() - transfer(h, c.p1())).norm();
      if (err > tc.epsilon_px + 1e-9) {
        std::ostringstream os;
        os << "inlier " << idx << " has reprojection error " << err
           << " above epsilon_px " << tc.epsilon_px;
        return os.str();
      }
    } catch (const PointAtInfinity&) {
      return "inlier " + std::to_string(idx) + " maps to infinity";
    }
  }
  return std::nullopt;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& path,
                  bool binary_sidecar) {
  std::filesystem::path json_path(path);
  std::ofstream sidecar;
  std::string sidecar_name;
  uint64_t sidecar_offset = 0;
  if (binary_sidecar) {
    std::filesystem::path bin_path = json_path;
    bin_path.replace_extension(".bin");
    sidecar_name = bin_path.filename().string();
    sidecar.open(bin_path, std::ios::binary | std::ios::trunc);
    if (!sidecar)
      throw InvalidInput("cannot open sidecar for writing: " + bin_path.string());
  }

  njson root;
  root["version"] = dataset.version;
  njson scenes = njson::object();
  for (const DatasetScene& scene : dataset.scenes) {
    njson pairs = njson::array();
    for (const TestCase& tc : scene.pairs)
      pairs.push_back(pair_to_json(tc, scene.name + "/" + tc.id,
                                   binary_sidecar ? &sidecar : nullptr,
                                   sidecar_name, &sidecar_offset));
    njson s;
    s["pairs"] = std::move(pairs);
    scenes[scene.name] = std::move(s);
  }
  root["scenes"] = std::move(scenes);

  std::ofstream out(json_path, std::ios::trunc);
  if (!out) throw InvalidInput("cannot open dataset for writing: " + path);
  out << root.dump(2) << "\n";
  if (!out) throw InvalidInput("failed to write dataset: " + path);
}

LoadResult load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset: " + path);
  njson root;
  try {
    root = njson::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }

  const njson& version = require_key(root, "version", "dataset");
  if (!version.is_number_integer() || version.get<int>() != kSupportedVersion)
    parse_fail("dataset.version",
               "unsupported version (expected " +
                   std::to_string(kSupportedVersion) + ")");

  SidecarCache cache;
  cache.base_dir = std::filesystem::path(path).parent_path();

  LoadResult result;
  result.dataset.version = version.get<int>();
  const njson& scenes = require_key(root, "scenes", "dataset");
  if (!scenes.is_object()) parse_fail("dataset.scenes", "expected an object");
  for (auto it = scenes.begin(); it != scenes.end(); ++it) {
    DatasetScene scene;
    scene.name = it.key();
    std::string scene_where = "scenes." + scene.name;
    const njson& pairs = require_key(*it, "pairs", scene_where);
    if (!pairs.is_array()) parse_fail(scene_where + ".pairs", "expected an array");
    for (size_t i = 0; i < pairs.size(); ++i) {
      std::string where = scene_where + ".pairs[" + std::to_string(i) + "]";
      TestCase tc = pair_from_json(pairs[i], cache, where);
      for (const TestCase& prev : scene.pairs)
        if (prev.id == tc.id)
          throw InvalidInput(where + ": duplicate pair id '" + tc.id + "'");
      if (std::optional<std::string> issue = ground_truth_issue(tc)) {
        result.quarantined.push_back({scene.name, tc.id, *issue});
        continue;
      }
      scene.pairs.push_back(std::move(tc));
    }
    result.dataset.scenes.push_back(std::move(scene));
  }
  return result;
}

std::string test_case_to_json(const TestCase& tc) {
  uint64_t unused = 0;
  return pair_to_json(tc, tc.id, nullptr, "", &unused).dump(2);
}

TestCase test_case_from_json(const std::string& text) {
  njson j;
  try {
    j = njson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("test case: ") + e.what());
  }
  SidecarCache cache;
  return pair_from_json(j, cache, "test_case");
}

Dataset import_external(const std::string& path) {
  throw InvalidInput(
      "external import of '" + path +
      "' is not supported: the source archive schema has not been validated "
      "against this loader");
}

}  // namespace homkit
