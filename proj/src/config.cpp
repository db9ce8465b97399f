#include "leafpipe/config.hpp"

#include "leafpipe/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>

namespace leafpipe {

using nlohmann::json;

json config_to_json(const PipelineConfig& c) {
  const AugmentSpec& a = c.augmentation;
  const AeTraining& ae = c.autoencoder;
  const ElmConfig& e = c.elm;
  return json{
      {"image_size", c.image_size},
      {"dicdm_image_size", c.dicdm_image_size},
      {"augmentation",
       {{"target_per_class", a.target_per_class},
        {"rotation_angles", a.rotation_angles},
        {"scale_factors", a.scale_factors},
        {"enable_flip", a.enable_flip}}},
      {"ahe", {{"tiles_x", c.ahe.tiles_x}, {"tiles_y", c.ahe.tiles_y}, {"bins", c.ahe.bins},
               {"clip_limit", c.ahe.clip_limit}}},
      {"texture", {{"levels", c.features.levels}, {"distance", c.features.distance}}},
      {"dimred",
       {{"pca_components", c.pca_components},
        {"kpca_components", c.kpca_components},
        {"kpca_gamma", c.kpca_gamma ? json(*c.kpca_gamma) : json(nullptr)},
        {"sparse_ae_bottleneck", c.sparse_ae_bottleneck},
        {"stacked_ae_intermediate", c.stacked_ae_intermediate},
        {"stacked_ae_bottleneck", c.stacked_ae_bottleneck},
        {"ae_epochs", ae.epochs},
        {"ae_learning_rate", ae.learning_rate},
        {"ae_batch_size", ae.batch_size},
        {"sparsity_target", ae.sparsity_target},
        {"sparsity_weight", ae.sparsity_weight}}},
      {"featselect",
       {{"anova_k", c.anova_k},
        {"chi_square_k", c.chi_square_k},
        {"forest_k", c.forest_k},
        {"forest_trees", c.forest.trees},
        {"forest_max_depth", c.forest.max_depth},
        {"forest_min_leaf", c.forest.min_leaf},
        {"forest_max_features", c.forest.max_features}}},
      {"elm",
       {{"mode", to_string(e.mode)},
        {"ridge", e.ridge},
        {"learning_rate", e.learning_rate},
        {"batch_size", e.batch_size},
        {"max_epochs", e.max_epochs},
        {"patience", e.patience},
        {"validation_fraction", e.validation_fraction}}},
      {"folds", c.folds},
      {"seed", c.seed},
  };
}

namespace {

void check_keys(const json& patch, const json& reference, const std::string& where) {
  if (!patch.is_object()) throw ArgumentError("config: " + (where.empty() ? "document" : where) + " must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!reference.contains(key)) throw ArgumentError("config: unknown key '" + path + "'");
    if (reference.at(key).is_object()) check_keys(value, reference.at(key), path);
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw ArgumentError(std::string("config: ") + what);
}

}  // namespace

PipelineConfig config_from_json(const json& patch) {
  const PipelineConfig defaults;
  json merged = config_to_json(defaults);
  check_keys(patch, merged, "");
  merged.merge_patch(patch);
  PipelineConfig c;
  try {
    c.image_size = merged.at("image_size").get<int>();
    c.dicdm_image_size = merged.at("dicdm_image_size").get<int>();
    const json& a = merged.at("augmentation");
    c.augmentation.target_per_class = a.at("target_per_class").get<int>();
    c.augmentation.rotation_angles = a.at("rotation_angles").get<std::vector<double>>();
    c.augmentation.scale_factors = a.at("scale_factors").get<std::vector<double>>();
    c.augmentation.enable_flip = a.at("enable_flip").get<bool>();
    const json& h = merged.at("ahe");
    c.ahe.tiles_x = h.at("tiles_x").get<int>();
    c.ahe.tiles_y = h.at("tiles_y").get<int>();
    c.ahe.bins = h.at("bins").get<int>();
    c.ahe.clip_limit = h.at("clip_limit").get<double>();
    const json& t = merged.at("texture");
    c.features.levels = t.at("levels").get<int>();
    c.features.distance = t.at("distance").get<int>();
    const json& d = merged.at("dimred");
    c.pca_components = d.at("pca_components").get<int>();
    c.kpca_components = d.at("kpca_components").get<int>();
    if (d.contains("kpca_gamma") && !d.at("kpca_gamma").is_null()) c.kpca_gamma = d.at("kpca_gamma").get<double>();
    c.sparse_ae_bottleneck = d.at("sparse_ae_bottleneck").get<int>();
    c.stacked_ae_intermediate = d.at("stacked_ae_intermediate").get<int>();
    c.stacked_ae_bottleneck = d.at("stacked_ae_bottleneck").get<int>();
    c.autoencoder.epochs = d.at("ae_epochs").get<int>();
    c.autoencoder.learning_rate = d.at("ae_learning_rate").get<double>();
    c.autoencoder.batch_size = d.at("ae_batch_size").get<int>();
    c.autoencoder.sparsity_target = d.at("sparsity_target").get<double>();
    c.autoencoder.sparsity_weight = d.at("sparsity_weight").get<double>();
    const json& f = merged.at("featselect");
    c.anova_k = f.at("anova_k").get<int>();
    c.chi_square_k = f.at("chi_square_k").get<int>();
    c.forest_k = f.at("forest_k").get<int>();
    c.forest.trees = f.at("forest_trees").get<int>();
    c.forest.max_depth = f.at("forest_max_depth").get<int>();
    c.forest.min_leaf = f.at("forest_min_leaf").get<int>();
    c.forest.max_features = f.at("forest_max_features").get<int>();
    const json& e = merged.at("elm");
    c.elm.mode = elm_mode_from_string(e.at("mode").get<std::string>());
    c.elm.ridge = e.at("ridge").get<double>();
    c.elm.learning_rate = e.at("learning_rate").get<double>();
    c.elm.batch_size = e.at("batch_size").get<int>();
    c.elm.max_epochs = e.at("max_epochs").get<int>();
    c.elm.patience = e.at("patience").get<int>();
    c.elm.validation_fraction = e.at("validation_fraction").get<double>();
    c.folds = merged.at("folds").get<int>();
    c.seed = merged.at("seed").get<std::uint64_t>();
  } catch (const json::exception& ex) {
    throw ArgumentError(std::string("config: ") + ex.what());
  }
  require(c.image_size >= 8, "image_size must be >= 8");
  require(c.dicdm_image_size >= 1, "dicdm_image_size must be >= 1");
  require(c.augmentation.target_per_class >= 1, "augmentation.target_per_class must be >= 1");
  for (double s : c.augmentation.scale_factors) require(s > 0, "augmentation.scale_factors must be positive");
  require(c.ahe.tiles_x >= 1 && c.ahe.tiles_y >= 1 && c.ahe.bins >= 2 && c.ahe.clip_limit >= 0, "invalid ahe settings");
  require(c.features.levels >= 2 && c.features.distance >= 1, "invalid texture settings");
  require(!c.kpca_gamma || *c.kpca_gamma > 0, "dimred.kpca_gamma must be positive");
  require(c.pca_components >= 1 && c.kpca_components >= 1 && c.sparse_ae_bottleneck >= 1 &&
              c.stacked_ae_intermediate >= 1 && c.stacked_ae_bottleneck >= 1,
          "dimred sizes must be >= 1");
  require(c.autoencoder.epochs >= 1 && c.autoencoder.batch_size >= 1 && c.autoencoder.learning_rate > 0,
          "invalid autoencoder training settings");
  require(c.anova_k >= 1 && c.chi_square_k >= 1 && c.forest_k >= 1, "featselect k must be >= 1");
  require(c.forest.trees >= 1 && c.forest.max_depth >= 1 && c.forest.min_leaf >= 1 && c.forest.max_features >= 0,
          "invalid forest settings");
  require(c.elm.ridge >= 0 && c.elm.learning_rate > 0 && c.elm.batch_size >= 1 && c.elm.max_epochs >= 1 &&
              c.elm.patience >= 1 && c.elm.validation_fraction > 0 && c.elm.validation_fraction < 1,
          "invalid elm settings");
  require(c.folds >= 2, "folds must be >= 2");
  c.augmentation.seed = c.seed;
  return c;
}

PipelineConfig config_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t end = std::min<std::size_t>(e.byte, text.size());
    const long line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n');
    throw ParseError("config " + path.string() + ": malformed JSON", line);
  }
  return config_from_json(j);
}

std::string config_hash(const PipelineConfig& c) {
  const std::string text = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentSettings experiment_settings(const PipelineConfig& c, int jobs) {
  ExperimentSettings s;
  s.folds = c.folds;
  s.seed = c.seed;
  s.jobs = jobs;
  s.elm = c.elm;
  s.pca_components = c.pca_components;
  s.kpca_components = c.kpca_components;
  s.kpca_gamma = c.kpca_gamma;
  s.sparse_ae_bottleneck = c.sparse_ae_bottleneck;
  s.stacked_ae_bottleneck = c.stacked_ae_bottleneck;
  s.stacked_ae_intermediate = c.stacked_ae_intermediate;
  s.autoencoder = c.autoencoder;
  s.anova_k = c.anova_k;
  s.chi_square_k = c.chi_square_k;
  s.forest_k = c.forest_k;
  s.forest = c.forest;
  s.config_hash = config_hash(c);
  return s;
}

}  // namespace leafpipe
