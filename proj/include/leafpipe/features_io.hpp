#pragma once

#include "leafpipe/feature_matrix.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace leafpipe {

inline constexpr int kFeaturesSchemaVersion = 1;

/// Sidecar metadata stored next to a features CSV as <file>.meta.json.
struct FeaturesMeta {
  int schema_version = kFeaturesSchemaVersion;
  std::string config_hash;
  std::vector<std::string> class_names;
};

/// Header `sample_id,label,<names>`, LF endings, shortest round-trip numbers.
std::string features_to_csv(const FeatureMatrix& m);

/// Inverse of features_to_csv. Malformed headers, ragged rows and
/// non-numeric cells raise ParseError carrying the 1-based line number.
FeatureMatrix features_from_csv(const std::string& text);

void features_save(const FeatureMatrix& m, const std::filesystem::path& path, const FeaturesMeta& meta = {});
FeatureMatrix features_load(const std::filesystem::path& path);
/// Missing sidecar yields defaults; a schema mismatch raises VersionError.
FeaturesMeta features_meta_load(const std::filesystem::path& csv_path);

/// Accepts the canonical 252 names in canonical order, any ascending subset of
/// them (selector output) or a reduced block (pca.*, kpca.*, sae.*, ae.*).
/// Anything else raises DictionaryMismatch.
void check_dictionary(const std::vector<std::string>& names);

}  // namespace leafpipe
