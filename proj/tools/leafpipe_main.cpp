// leafpipe command-line front end.
#include "leafpipe/augment.hpp"
#include "leafpipe/config.hpp"
#include "leafpipe/dataset.hpp"
#include "leafpipe/dimred.hpp"
#include "leafpipe/elm.hpp"
#include "leafpipe/errors.hpp"
#include "leafpipe/eval.hpp"
#include "leafpipe/features_io.hpp"
#include "leafpipe/featselect.hpp"
#include "leafpipe/parallel.hpp"
#include "leafpipe/pipeline.hpp"
#include "leafpipe/random.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace leafpipe;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> jobs;
  bool print_config = false;
};

PipelineConfig load_config(const Globals& g) {
  PipelineConfig c = g.config_path.empty() ? config_from_json(nlohmann::json::object()) : config_load(g.config_path);
  if (g.seed) {
    c.seed = *g.seed;
    c.augmentation.seed = *g.seed;
  }
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string require_out(const Globals& g, const char* what) {
  if (g.out.empty()) throw ArgumentError(std::string("--out is required (") + what + ")");
  return g.out;
}

std::vector<std::string> class_names_for(const FeatureMatrix& m, const FeaturesMeta& meta) {
  if (!meta.class_names.empty()) return meta.class_names;
  int k = 0;
  for (int l : m.labels) k = std::max(k, l + 1);
  std::vector<std::string> names;
  for (int c = 0; c < k; ++c) names.push_back("class" + std::to_string(c));
  return names;
}

void print_metrics(const MetricsReport& r, const ConfusionMatrix& cm, const std::vector<std::string>& classes) {
  nlohmann::json j;
  j["accuracy"] = r.accuracy;
  j["sensitivity"] = r.sensitivity;
  j["specificity"] = r.specificity;
  j["precision"] = r.precision;
  j["f_measure"] = r.f_measure;
  j["class_names"] = classes;
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < cm.counts.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < cm.counts.cols(); ++k) row.push_back(cm.counts(i, k));
    rows.push_back(row);
  }
  j["confusion"] = rows;
  std::cout << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rice leaf disease feature pipeline and ELM experiments"};
  app.set_version_flag("--version", "leafpipe 1.0");
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file (merged over defaults)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Global seed (overrides the config)");
  app.add_option("--out", g.out, "Output path (file or directory, per subcommand)");
  app.add_option("--jobs", g.jobs, "Worker threads (default: LEAFPIPE_JOBS, else 1)")->check(CLI::PositiveNumber);
  app.add_flag("--print-config", g.print_config, "Print the effective config and exit");

  SynthSpec synth;
  auto* cmd_synth = app.add_subcommand("synth-data", "Generate the procedural six-class leaf dataset");
  cmd_synth->add_option("--per-class", synth.per_class, "Images per class")->check(CLI::Range(10, 1000000));
  cmd_synth->add_option("--separability", synth.separability, "Lesion contrast in [0, 1]")->check(CLI::Range(0.0, 1.0));
  cmd_synth->add_option("--side", synth.side, "Image side in pixels")->check(CLI::Range(8, 4096));

  std::string root;
  auto* cmd_ingest = app.add_subcommand("ingest", "Scan a directory-per-class dataset");
  cmd_ingest->add_option("root", root, "Dataset root")->required();

  auto* cmd_augment = app.add_subcommand("augment", "Flip/rotate/scale each class up to the target count");
  cmd_augment->add_option("root", root, "Dataset root")->required();

  std::string image_path;
  bool overlay = false;
  auto* cmd_segment = app.add_subcommand("segment", "Segment one image (writes gray and mask PNGs)");
  cmd_segment->add_option("image", image_path, "Input image")->required();
  cmd_segment->add_flag("--overlay", overlay, "Also write a lesion overlay");

  auto* cmd_extract = app.add_subcommand("extract", "Extract the 252-feature CSV from a dataset");
  cmd_extract->add_option("root", root, "Dataset root")->required();

  std::string features_path, method;
  std::optional<int> count;
  auto* cmd_reduce = app.add_subcommand("reduce", "Standardize then reduce a features CSV");
  cmd_reduce->add_option("features", features_path, "Features CSV")->required();
  cmd_reduce->add_option("--method", method, "pca | kpca | sparse-ae | stacked-ae")->required();
  cmd_reduce->add_option("--components", count, "Output dimension");

  auto* cmd_select = app.add_subcommand("select", "Standardize, score and keep the top-k columns");
  cmd_select->add_option("features", features_path, "Features CSV")->required();
  cmd_select->add_option("--method", method, "anova | chi2 | rf")->required();
  cmd_select->add_option("--k", count, "Columns to keep");

  auto* cmd_train = app.add_subcommand("train", "Train an ELM (hidden = 2 x features) on a features CSV");
  cmd_train->add_option("features", features_path, "Features CSV")->required();

  std::string model_path;
  auto* cmd_eval = app.add_subcommand("eval", "Evaluate a trained model on a features CSV");
  cmd_eval->add_option("features", features_path, "Features CSV")->required();
  cmd_eval->add_option("--model", model_path, "Model JSON")->required();

  std::string rows_spec = "all";
  std::optional<int> folds;
  auto* cmd_run = app.add_subcommand("run-experiment", "Cross-validated experiment matrix");
  cmd_run->add_option("root", root, "Dataset root")->required();
  cmd_run->add_option("--rows", rows_spec, "all or a comma list of row names");
  cmd_run->add_option("--folds", folds, "Folds (overrides the config)")->check(CLI::Range(2, 1000));

  std::string report_path;
  bool csv = false;
  auto* cmd_report = app.add_subcommand("report", "Render the table from a saved report.json");
  cmd_report->add_option("report", report_path, "report.json")->required();
  cmd_report->add_flag("--csv", csv, "CSV instead of the text table");

  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (char& ch : msg)
      if (ch == '\n') ch = ' ';
    std::cerr << "error: usage: " << msg << '\n';
    return 2;
  }

  try {
    const PipelineConfig config = load_config(g);
    const std::string hash = config_hash(config);
    const int jobs = resolve_jobs(g.jobs);

    if (g.print_config) {
      std::cout << config_to_json(config).dump(2) << '\n';
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << "error: usage: a subcommand is required (see --help)\n";
      return 2;
    }

    if (cmd_synth->parsed()) {
      synth.seed = config.seed;
      const fs::path out = g.out.empty() ? fs::path("synth") : fs::path(g.out);
      const DatasetManifest m = synth_generate(synth, out, jobs);
      std::cout << manifest_to_json(m).dump() << '\n';
    } else if (cmd_ingest->parsed()) {
      const std::string text = manifest_to_json(ingest(root)).dump(2) + "\n";
      if (g.out.empty())
        std::cout << text;
      else
        write_text(g.out, text);
    } else if (cmd_augment->parsed()) {
      const fs::path out = require_out(g, "output dataset directory");
      const DatasetManifest m = ingest(root);
      for (std::size_t c = 0; c < m.classes.size(); ++c) {
        std::vector<ImageRGB> images;
        for (const auto& p : m.samples[c]) images.push_back(decode_image(p));
        const auto augmented = augment_class(images, config.augmentation, c, jobs);
        fs::create_directories(out / m.classes[c]);
        for (std::size_t i = 0; i < augmented.size(); ++i) {
          char file[64];
          std::snprintf(file, sizeof file, "%05zu.png", i);
          write_png(augmented[i], out / m.classes[c] / (m.classes[c] + "_" + file));
        }
        std::cout << m.classes[c] << ": " << images.size() << " -> " << augmented.size() << '\n';
      }
    } else if (cmd_segment->parsed()) {
      const fs::path out = g.out.empty() ? fs::path(".") : fs::path(g.out);
      fs::create_directories(out);
      const ImageRGB rgb = resize_bilinear(decode_image(image_path), config.image_size, config.image_size);
      const SegmentedImage seg = segment_leaf(rgb, config.ahe);
      const std::string stem = fs::path(image_path).stem().string();
      ImageRGB gray(seg.gray.cols(), seg.gray.rows());
      for (int y = 0; y < gray.height; ++y)
        for (int x = 0; x < gray.width; ++x)
          for (int c = 0; c < 3; ++c)
            gray.at(x, y, c) = static_cast<std::uint8_t>(std::lround(std::clamp(seg.gray(y, x), 0.0, 1.0) * 255));
      write_png(gray, out / (stem + "_gray.png"));
      write_mask_png(seg.mask, out / (stem + "_mask.png"));
      if (overlay) write_png(mask_overlay(rgb, seg.mask), out / (stem + "_overlay.png"));
      nlohmann::json j{{"threshold", seg.threshold},
                       {"fallback", seg.fallback},
                       {"coverage", seg.mask.cast<double>().mean()}};
      std::cout << j.dump() << '\n';
    } else if (cmd_extract->parsed()) {
      const fs::path out = require_out(g, "features CSV path");
      const DatasetManifest m = ingest(root);
      const ExperimentInputs in = prepare_inputs(m, config, jobs, false);
      features_save(in.features, out, {kFeaturesSchemaVersion, hash, m.classes});
      std::cout << "wrote " << in.features.rows() << " x " << in.features.cols() << " features to " << out.string()
                << '\n';
    } else if (cmd_reduce->parsed()) {
      const fs::path out = require_out(g, "reduced CSV path");
      const FeatureMatrix raw = features_load(features_path);
      const FeaturesMeta meta = features_meta_load(features_path);
      check_dictionary(raw.names);
      const FeatureMatrix z = standardize_fit_apply(raw);
      FeatureMatrix reduced;
      AeTraining t = config.autoencoder;
      t.seed = derive_seed(config.seed, {0xae});
      if (method == "pca") {
        reduced = pca_transform(pca_fit(z, count.value_or(config.pca_components)), z);
      } else if (method == "kpca") {
        reduced = kpca_transform(kpca_fit(z, count.value_or(config.kpca_components), config.kpca_gamma), z);
      } else if (method == "sparse-ae") {
        reduced = ae_encode(sparse_ae_fit(z, count.value_or(config.sparse_ae_bottleneck), t), z);
      } else if (method == "stacked-ae") {
        t.sparsity_weight = 0;
        reduced = ae_encode(
            stacked_ae_fit(z, t, config.stacked_ae_intermediate, count.value_or(config.stacked_ae_bottleneck)), z);
      } else {
        throw ArgumentError("unknown reduction method '" + method + "' (pca, kpca, sparse-ae, stacked-ae)");
      }
      reduced.standardization.reset();
      features_save(reduced, out, {kFeaturesSchemaVersion, hash, meta.class_names});
      std::cout << "wrote " << reduced.rows() << " x " << reduced.cols() << " to " << out.string() << '\n';
    } else if (cmd_select->parsed()) {
      const fs::path out = require_out(g, "selected CSV path");
      const FeatureMatrix raw = features_load(features_path);
      const FeaturesMeta meta = features_meta_load(features_path);
      check_dictionary(raw.names);
      const SelectorMethod sm = selector_method_from_string(method);
      const int k = count.value_or(sm == SelectorMethod::anova_f      ? config.anova_k
                                   : sm == SelectorMethod::chi_square ? config.chi_square_k
                                                                      : config.forest_k);
      const FeatureMatrix z = standardize_fit_apply(raw);
      const SelectorModel model = selector_fit(z, sm, k, derive_seed(config.seed, {0xf5}), config.forest, jobs);
      FeatureMatrix selected = raw.select_cols(model.selected);
      features_save(selected, out, {kFeaturesSchemaVersion, hash, meta.class_names});
      for (int idx : model.selected) std::cout << raw.names[idx] << ' ' << model.scores(idx) << '\n';
    } else if (cmd_train->parsed()) {
      const fs::path out = require_out(g, "model JSON path");
      const FeatureMatrix raw = features_load(features_path);
      const FeaturesMeta meta = features_meta_load(features_path);
      check_dictionary(raw.names);
      const auto classes = class_names_for(raw, meta);
      const Standardization st = Standardization::fit(raw.values);
      ElmConfig cfg = config.elm;
      const ElmConfig f = ElmConfig::fadm(static_cast<int>(raw.cols()));
      cfg.input_dim = f.input_dim;
      cfg.hidden_dim = f.hidden_dim;
      cfg.classes = static_cast<int>(classes.size());
      cfg.seed = derive_seed(config.seed, {0xe1});
      ElmModel model = elm_train(st.apply(raw.values), raw.labels, cfg);
      model.standardization = st;
      model.class_names = classes;
      model.feature_names = raw.names;
      model_save(model, out, hash);
      const auto pred = elm_predict(model, raw.values);
      const MetricsReport r = metrics(confusion(raw.labels, pred, cfg.classes));
      std::cout << "trained ELM " << cfg.input_dim << "-" << cfg.hidden_dim << "-" << cfg.classes
                << ", training accuracy " << r.accuracy << "%\n";
    } else if (cmd_eval->parsed()) {
      const ElmModel model = model_load(model_path);
      const FeatureMatrix m = features_load(features_path);
      if (!model.feature_names.empty() && m.names != model.feature_names)
        throw DictionaryMismatch("features header does not match the model's feature dictionary");
      const auto pred = elm_predict(model, m.values);
      const ConfusionMatrix cm = confusion(m.labels, pred, model.classes());
      print_metrics(metrics(cm), cm, model.class_names);
    } else if (cmd_run->parsed()) {
      PipelineConfig c = config;
      if (folds) c.folds = *folds;
      const auto rows = parse_rows(rows_spec);
      const fs::path out = g.out.empty() ? fs::path("experiment") : fs::path(g.out);
      const DatasetManifest m = ingest(root);
      const ExperimentInputs in = prepare_inputs(m, c, jobs, std::find(rows.begin(), rows.end(),
                                                                       ExperimentRow::dicdm) != rows.end());
      const ExperimentReport report = run_experiment(in, rows, experiment_settings(c, jobs));
      const nlohmann::json j = report_to_json(report);
      const std::string table = render_table(j);
      write_text(out / "report.json", j.dump(2) + "\n");
      write_text(out / "table.txt", table);
      write_text(out / "table.csv", render_csv(j));
      std::cout << table;
      if (report.leakage_violations() != 0) throw SolverError("audit found fits that touched test rows");
    } else if (cmd_report->parsed()) {
      const nlohmann::json j = [&] {
        try {
          return nlohmann::json::parse(read_text(report_path));
        } catch (const nlohmann::json::exception& e) {
          throw LoadError("report " + report_path + ": " + e.what());
        }
      }();
      if (!j.contains("schema_version") || j.at("schema_version") != kReportSchemaVersion)
        throw VersionError("report schema_version mismatch");
      const std::string text = csv ? render_csv(j) : render_table(j);
      if (g.out.empty())
        std::cout << text;
      else
        write_text(g.out, text);
    }
    return 0;
  } catch (const Error& e) {
    std::string msg = e.what();
    for (char& ch : msg)
      if (ch == '\n') ch = ' ';
    std::cerr << "error: " << e.kind() << ": " << msg << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
}
