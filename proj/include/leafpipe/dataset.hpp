#pragma once

#include "leafpipe/imgcore.hpp"
#include "leafpipe/segment.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace leafpipe {

/// Directory-per-class dataset. Class order is lexicographic and defines
/// label indices 0..K-1.
struct DatasetManifest {
  std::filesystem::path root;
  std::vector<std::string> classes;
  std::vector<std::vector<std::filesystem::path>> samples;  // per class, sorted

  std::vector<int> counts() const;
  int total() const;
};

/// Scans one subdirectory per class for PNG/JPEG files; other files are
/// skipped with a warning on stderr. Throws IngestError for a missing root,
/// no class directories, or an empty class.
DatasetManifest ingest(const std::filesystem::path& root);

nlohmann::json manifest_to_json(const DatasetManifest& m);

/// The six classes in label order.
const std::vector<std::string>& synth_class_names();

struct SynthSpec {
  int classes = 6;
  int per_class = 100;
  double separability = 1.0;  // 0: lesions invisible, 1: full contrast
  std::uint64_t seed = 0;
  int side = 64;
};

struct SynthSample {
  ImageRGB image;
  BinaryMask lesion;  // ground-truth lesion pixels
};

/// Procedural leaf: green value-noise base with veins plus the class motif
/// (spot field, blotch, stripe, edge scald, sheath band, none for healthy).
SynthSample synth_image(int class_index, double separability, std::uint64_t seed, int side = 64);

/// Writes <out>/images/<class>/<class>_NNNN.png and the matching masks under
/// <out>/masks/<class>/, then ingests <out>/images.
DatasetManifest synth_generate(const SynthSpec& spec, const std::filesystem::path& out, int jobs = 1);

}  // namespace leafpipe
