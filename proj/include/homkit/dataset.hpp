#pragma once

#include <string>
#include <vector>

#include "homkit/synth.hpp"

namespace homkit {

/// One named scene: a shared 3D layout observed by several image pairs.
struct DatasetScene {
  std::string name;
  std::vector<TestCase> pairs;
};

struct Dataset {
  int version = 1;
  std::vector<DatasetScene> scenes;
};

/// A pair removed on load because its ground truth fails a consistency check
/// (e.g. a listed inlier violates the pair's reprojection tolerance). Such
/// pairs are data-quality issues, not format errors, so loading continues.
struct QuarantineEntry {
  std::string scene;
  std::string pair_id;
  std::string reason;
};

struct LoadResult {
  Dataset dataset;
  std::vector<QuarantineEntry> quarantined;
};

/// Serializes to an indented JSON document. Scene and pair order is preserved
/// and doubles are written in shortest round-trip form, so saving the same
/// dataset twice produces identical bytes. With `binary_sidecar`, the
/// correspondence arrays move to a packed float64 file next to `path` and the
/// JSON keeps references into it.
void save_dataset(const Dataset& dataset, const std::string& path,
                  bool binary_sidecar = false);

/// Parses and validates a dataset file. Format problems (malformed JSON,
/// missing keys, wrong shapes, unsupported version) throw ParseError with the
/// offending location; structural violations (bad split tag, out-of-range
/// inlier indices, non-positive tolerances) throw InvalidInput. Ground-truth
/// quality violations quarantine the pair instead of failing the load.
LoadResult load_dataset(const std::string& path);

/// Serialized form of one test case; exposed for config files and reports.
std::string test_case_to_json(const TestCase& tc);
TestCase test_case_from_json(const std::string& text);

/// Placeholder for ingesting externally published benchmark archives. The
/// on-disk schema of those archives has not been validated against this
/// loader, so this always throws InvalidInput.
Dataset import_external(const std::string& path);

}  // namespace homkit
