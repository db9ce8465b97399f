#pragma once

#include "leafpipe/augment.hpp"
#include "leafpipe/dimred.hpp"
#include "leafpipe/elm.hpp"
#include "leafpipe/eval.hpp"
#include "leafpipe/featselect.hpp"
#include "leafpipe/features.hpp"
#include "leafpipe/preprocess.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace leafpipe {

/// Every tunable of the pipeline. Defaults follow the published setup;
/// `dicdm_image_size` is the reduced direct-pixel resolution used at desk scale.
struct PipelineConfig {
  int image_size = kFullImageSide;
  int dicdm_image_size = 64;
  AugmentSpec augmentation;
  AheParams ahe;
  FeatureConfig features;
  int pca_components = kPcaComponents;
  int kpca_components = kKpcaComponents;
  std::optional<double> kpca_gamma;
  int sparse_ae_bottleneck = kSparseAeBottleneck;
  int stacked_ae_intermediate = kStackedAeIntermediate;
  int stacked_ae_bottleneck = kStackedAeBottleneck;
  AeTraining autoencoder;
  int anova_k = kAnovaSelected;
  int chi_square_k = kChiSquareSelected;
  int forest_k = kForestSelected;
  ForestParams forest;
  ElmConfig elm;
  int folds = 10;
  std::uint64_t seed = 0;
};

nlohmann::json config_to_json(const PipelineConfig& c);

/// Starts from the defaults and applies `j` as a merge patch. Unknown keys and
/// out-of-range values raise ArgumentError.
PipelineConfig config_from_json(const nlohmann::json& j);

PipelineConfig config_load(const std::filesystem::path& path);

/// 16 hex digits of FNV-1a over the canonical JSON form.
std::string config_hash(const PipelineConfig& c);

ExperimentSettings experiment_settings(const PipelineConfig& c, int jobs);

}  // namespace leafpipe
