#include "leafpipe/eval.hpp"

#include "leafpipe/errors.hpp"
#include "leafpipe/features.hpp"
#include "leafpipe/parallel.hpp"
#include "leafpipe/random.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace leafpipe {

ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& predicted, int classes) {
  if (truth.size() != predicted.size()) throw ArgumentError("confusion: length mismatch");
  ConfusionMatrix cm{Eigen::MatrixXi::Zero(classes, classes)};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= classes || predicted[i] < 0 || predicted[i] >= classes)
      throw ArgumentError("confusion: label out of range");
    ++cm.counts(truth[i], predicted[i]);
  }
  return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
  const int k = static_cast<int>(cm.counts.rows());
  const double total = static_cast<double>(cm.total());
  MetricsReport r;
  auto ratio = [](double num, double den, bool& degenerate) {
    if (den == 0) {
      degenerate = true;
      return 0.0;
    }
    return num / den;
  };
  for (int c = 0; c < k; ++c) {
    const double tp = cm.counts(c, c);
    const double fn = cm.counts.row(c).sum() - tp;
    const double fp = cm.counts.col(c).sum() - tp;
    const double tn = total - tp - fn - fp;
    ClassMetrics m;
    m.sensitivity = ratio(tp, tp + fn, m.degenerate);
    m.specificity = ratio(tn, tn + fp, m.degenerate);
    m.precision = ratio(tp, tp + fp, m.degenerate);
    m.f_measure = ratio(2 * m.precision * m.sensitivity, m.precision + m.sensitivity, m.degenerate);
    r.per_class.push_back(m);
    r.sensitivity += m.sensitivity;
    r.specificity += m.specificity;
    r.precision += m.precision;
    r.f_measure += m.f_measure;
  }
  r.sensitivity /= k;
  r.specificity /= k;
  r.precision /= k;
  r.f_measure /= k;
  r.accuracy = total > 0 ? 100.0 * cm.counts.trace() / total : 0.0;
  return r;
}

std::vector<std::vector<int>> stratified_kfold(const std::vector<int>& labels, int k, std::uint64_t seed) {
  if (k < 2) throw ArgumentError("stratified_kfold: k must be >= 2");
  std::map<int, std::vector<int>> by_class;
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) by_class[labels[i]].push_back(i);
  for (const auto& [label, idx] : by_class)
    if (static_cast<int>(idx.size()) < k)
      throw ArgumentError("stratified_kfold: class " + std::to_string(label) + " has fewer than " +
                          std::to_string(k) + " samples");
  std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
  int cursor = 0;
  for (auto& [label, idx] : by_class) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(static_cast<std::int64_t>(label))}));
    rng.shuffle(idx);
    for (int i : idx) {
      folds[static_cast<std::size_t>(cursor)].push_back(i);
      cursor = (cursor + 1) % k;
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

namespace {

constexpr RowInfo kRows[kExperimentRowCount] = {
    {"DICDM", "DICDM", "ELM"},
    {"Texture", "FEAs", "Texture"},
    {"GLCM", "FEAs", "GLCM"},
    {"GLDM", "FEAs", "GLDM"},
    {"FFT", "FEAs", "FFT"},
    {"DWT", "FEAs", "DWT"},
    {"All", "FEAs", "Texture + GLCM + GLDM + FFT + DWT (All)"},
    {"Frequency", "FEAs", "Frequency Domain (FFT + DWT)"},
    {"Spatial", "FEAs", "Spatial Domain (Texture + GLCM + GLDM)"},
    {"PCA", "DRAs", "PCA"},
    {"KPCA", "DRAs", "KPCA"},
    {"SparseAE", "DRAs", "Sparse Autoencoder"},
    {"StackedAE", "DRAs", "Stacked Autoencoder"},
    {"Anova", "FSAs", "Anova F-measure"},
    {"ChiSquare", "FSAs", "Chi-square Test"},
    {"RF", "FSAs", "Random Forest"},
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<int> range_cols(int start, int count) {
  std::vector<int> v(static_cast<std::size_t>(count));
  std::iota(v.begin(), v.end(), start);
  return v;
}

// Columns of the raw 252-vector used by a feature-extraction row.
std::vector<int> fea_columns(ExperimentRow row) {
  namespace fl = feature_layout;
  switch (row) {
    case ExperimentRow::texture: return range_cols(fl::kTexture, fl::kTextureCount);
    case ExperimentRow::glcm: return range_cols(fl::kGlcm, fl::kGlcmCount);
    case ExperimentRow::gldm: return range_cols(fl::kGldm, fl::kGldmCount);
    case ExperimentRow::fft: return range_cols(fl::kFft, fl::kFftCount);
    case ExperimentRow::dwt: return range_cols(fl::kDwt, fl::kDwtCount);
    case ExperimentRow::frequency: return range_cols(fl::kFrequency, fl::kFrequencyCount);
    case ExperimentRow::spatial: return range_cols(fl::kSpatial, fl::kSpatialCount);
    default: return range_cols(0, fl::kTotal);
  }
}

bool is_fea(ExperimentRow r) { return r >= ExperimentRow::texture && r <= ExperimentRow::spatial; }

struct FoldTask {
  ExperimentRow row;
  int row_slot;
  int fold;
};

struct FoldOutcome {
  std::optional<FoldResult> result;
  std::string error;
  int features = 0;
  int hidden = 0;
  std::vector<AuditEvent> audit;
};

class FoldRunner {
 public:
  FoldRunner(const ExperimentInputs& in, const ExperimentSettings& s, const FoldTask& task,
             const std::vector<int>& train, const std::vector<int>& test, FoldOutcome& out)
      : in_(in), s_(s), task_(task), train_(train), test_(test), out_(out), test_set_(test.begin(), test.end()) {}

  void run() {
    const std::uint64_t seed = derive_seed(s_.seed, {static_cast<std::uint64_t>(task_.row),
                                                     static_cast<std::uint64_t>(task_.fold)});
    std::vector<int> y_train, y_test;
    for (int i : train_) y_train.push_back(in_.features.labels[i]);
    for (int i : test_) y_test.push_back(in_.features.labels[i]);

    Eigen::MatrixXd x_train, x_test;
    if (task_.row == ExperimentRow::dicdm) {
      if (in_.pixels.rows() != in_.features.rows() || in_.pixels.cols() != in_.image_side * in_.image_side)
        throw ArgumentError("DICDM: pixel matrix does not match image_side^2 columns");
      x_train = in_.pixels(train_, Eigen::all);
      x_test = in_.pixels(test_, Eigen::all);
    } else {
      prepare_features(seed, x_train, x_test);
    }

    ElmConfig cfg = s_.elm;
    if (task_.row == ExperimentRow::dicdm) {
      const ElmConfig d = ElmConfig::dicdm(in_.image_side);
      cfg.input_dim = d.input_dim;
      cfg.hidden_dim = d.hidden_dim;
    } else {
      const ElmConfig f = ElmConfig::fadm(static_cast<int>(x_train.cols()));
      cfg.input_dim = f.input_dim;
      cfg.hidden_dim = f.hidden_dim;
    }
    const int max_label = *std::max_element(in_.features.labels.begin(), in_.features.labels.end());
    cfg.classes = std::max({static_cast<int>(in_.class_names.size()), max_label + 1, 2});
    cfg.seed = derive_seed(seed, {1});
    out_.features = cfg.input_dim;
    out_.hidden = cfg.hidden_dim;

    audit("elm", "fit", "train", train_);
    const ElmModel model = elm_train(x_train, y_train, cfg);
    audit("elm", "transform", "test", test_);
    const std::vector<int> pred = elm_predict(model, x_test);

    FoldResult r;
    r.fold = task_.fold;
    r.cm = confusion(y_test, pred, cfg.classes);
    r.metrics = metrics(r.cm);
    out_.result = std::move(r);
  }

 private:
  void audit(const char* stage, const char* action, const char* subset, const std::vector<int>& rows) {
    AuditEvent e;
    e.row = task_.row;
    e.fold = task_.fold;
    e.stage = stage;
    e.action = action;
    e.subset = subset;
    e.rows = static_cast<int>(rows.size());
    e.touches_test_rows = std::any_of(rows.begin(), rows.end(), [&](int i) { return test_set_.count(i) > 0; });
    out_.audit.push_back(std::move(e));
  }

  // Standardize on the training fold, then apply the row's reducer/selector.
  void prepare_features(std::uint64_t seed, Eigen::MatrixXd& x_train, Eigen::MatrixXd& x_test) {
    const std::vector<int> cols = fea_columns(task_.row);
    FeatureMatrix train = in_.features.select_rows(train_).select_cols(cols);
    FeatureMatrix test = in_.features.select_rows(test_).select_cols(cols);

    audit("standardize", "fit", "train", train_);
    const Standardization st = Standardization::fit(train.values);
    audit("standardize", "transform", "train", train_);
    audit("standardize", "transform", "test", test_);
    train = standardize_apply(train, st);
    test = standardize_apply(test, st);

    if (is_fea(task_.row) || task_.row == ExperimentRow::all) {
      x_train = std::move(train.values);
      x_test = std::move(test.values);
      return;
    }

    FeatureMatrix rtrain, rtest;
    const std::uint64_t aux_seed = derive_seed(seed, {2});
    const char* stage = row_info(task_.row).name;
    audit(stage, "fit", "train", train_);
    switch (task_.row) {
      case ExperimentRow::pca: {
        const PcaModel m = pca_fit(train, s_.pca_components);
        rtrain = pca_transform(m, train);
        rtest = pca_transform(m, test);
        break;
      }
      case ExperimentRow::kpca: {
        const KpcaModel m = kpca_fit(train, s_.kpca_components, s_.kpca_gamma);
        rtrain = kpca_transform(m, train);
        rtest = kpca_transform(m, test);
        break;
      }
      case ExperimentRow::sparse_ae: {
        AeTraining t = s_.autoencoder;
        t.seed = aux_seed;
        const AutoencoderModel m = sparse_ae_fit(train, s_.sparse_ae_bottleneck, t);
        rtrain = ae_encode(m, train);
        rtest = ae_encode(m, test);
        break;
      }
      case ExperimentRow::stacked_ae: {
        AeTraining t = s_.autoencoder;
        t.seed = aux_seed;
        t.sparsity_weight = 0;
        const AutoencoderModel m =
            stacked_ae_fit(train, t, s_.stacked_ae_intermediate, s_.stacked_ae_bottleneck);
        rtrain = ae_encode(m, train);
        rtest = ae_encode(m, test);
        break;
      }
      case ExperimentRow::anova:
      case ExperimentRow::chi_square:
      case ExperimentRow::random_forest: {
        const SelectorMethod method = task_.row == ExperimentRow::anova        ? SelectorMethod::anova_f
                                      : task_.row == ExperimentRow::chi_square ? SelectorMethod::chi_square
                                                                               : SelectorMethod::random_forest;
        const int k = task_.row == ExperimentRow::anova        ? s_.anova_k
                      : task_.row == ExperimentRow::chi_square ? s_.chi_square_k
                                                               : s_.forest_k;
        const SelectorModel m = selector_fit(train, method, k, aux_seed, s_.forest, 1);
        rtrain = select(train, m);
        rtest = select(test, m);
        break;
      }
      default:
        throw ArgumentError("unhandled experiment row");
    }
    audit(stage, "transform", "train", train_);
    audit(stage, "transform", "test", test_);

    // Reduced/selected columns are re-standardized on the training fold.
    audit("standardize_reduced", "fit", "train", train_);
    const Standardization st2 = Standardization::fit(rtrain.values);
    x_train = st2.apply(rtrain.values);
    x_test = st2.apply(rtest.values);
  }

  const ExperimentInputs& in_;
  const ExperimentSettings& s_;
  const FoldTask& task_;
  const std::vector<int>& train_;
  const std::vector<int>& test_;
  FoldOutcome& out_;
  std::set<int> test_set_;
};

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

const RowInfo& row_info(ExperimentRow row) { return kRows[static_cast<int>(row)]; }

std::vector<ExperimentRow> all_rows() {
  std::vector<ExperimentRow> rows;
  for (int i = 0; i < kExperimentRowCount; ++i) rows.push_back(static_cast<ExperimentRow>(i));
  return rows;
}

std::vector<ExperimentRow> parse_rows(const std::string& list) {
  if (lower(list) == "all") return all_rows();
  std::vector<ExperimentRow> rows;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string key = lower(item);
    bool found = false;
    for (int i = 0; i < kExperimentRowCount; ++i)
      if (lower(kRows[i].name) == key) {
        const auto r = static_cast<ExperimentRow>(i);
        if (std::find(rows.begin(), rows.end(), r) == rows.end()) rows.push_back(r);
        found = true;
      }
    if (!found) throw ArgumentError("unknown experiment row '" + item + "'");
  }
  if (rows.empty()) throw ArgumentError("no experiment rows requested");
  return rows;
}

long ExperimentReport::leakage_violations() const {
  return std::count_if(audit.begin(), audit.end(),
                       [](const AuditEvent& e) { return e.action == "fit" && e.touches_test_rows; });
}

ExperimentReport run_experiment(const ExperimentInputs& inputs, const std::vector<ExperimentRow>& rows,
                                const ExperimentSettings& settings) {
  inputs.features.validate();
  ExperimentReport report;
  report.seed = settings.seed;
  report.folds = settings.folds;
  report.config_hash = settings.config_hash;
  report.elm_mode = to_string(settings.elm.mode);
  report.class_names = inputs.class_names;
  report.image_side = inputs.image_side;

  const auto folds = stratified_kfold(inputs.features.labels, settings.folds, derive_seed(settings.seed, {0xf01d}));
  std::vector<std::vector<int>> trains(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<char> in_test(inputs.features.labels.size(), 0);
    for (int i : folds[f]) in_test[i] = 1;
    for (int i = 0; i < static_cast<int>(in_test.size()); ++i)
      if (!in_test[i]) trains[f].push_back(i);
  }

  std::vector<FoldTask> tasks;
  for (int r = 0; r < static_cast<int>(rows.size()); ++r)
    for (int f = 0; f < settings.folds; ++f) tasks.push_back({rows[r], r, f});
  std::vector<FoldOutcome> outcomes(tasks.size());

  parallel_for(tasks.size(), settings.jobs, [&](std::size_t t) {
    const FoldTask& task = tasks[t];
    try {
      FoldRunner(inputs, settings, task, trains[task.fold], folds[task.fold], outcomes[t]).run();
    } catch (const std::exception& e) {
      outcomes[t].error = e.what();
    }
  });

  for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
    RowResult row;
    row.row = rows[r];
    std::vector<double> acc, sens, spec, prec, fm;
    for (int f = 0; f < settings.folds; ++f) {
      FoldOutcome& o = outcomes[static_cast<std::size_t>(r * settings.folds + f)];
      report.audit.insert(report.audit.end(), o.audit.begin(), o.audit.end());
      if (o.features) row.features = o.features;
      if (o.hidden) row.hidden = o.hidden;
      if (!o.result) {
        if (row.ok) row.error = "fold " + std::to_string(f) + ": " + o.error;
        row.ok = false;
        continue;
      }
      acc.push_back(o.result->metrics.accuracy);
      sens.push_back(o.result->metrics.sensitivity);
      spec.push_back(o.result->metrics.specificity);
      prec.push_back(o.result->metrics.precision);
      fm.push_back(o.result->metrics.f_measure);
      row.folds.push_back(std::move(*o.result));
    }
    if (row.ok) {
      row.accuracy_mean = mean_of(acc);
      row.accuracy_std = sample_std(acc);
      row.sensitivity = mean_of(sens);
      row.specificity = mean_of(spec);
      row.precision = mean_of(prec);
      row.f_measure = mean_of(fm);
    } else {
      row.folds.clear();
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

nlohmann::json report_to_json(const ExperimentReport& report) {
  using nlohmann::json;
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["config_hash"] = report.config_hash;
  j["seed"] = report.seed;
  j["folds"] = report.folds;
  j["elm_mode"] = report.elm_mode;
  j["class_names"] = report.class_names;
  j["image_side"] = report.image_side;
  j["accuracy_std_kind"] = "sample std over folds";
  j["averaging"] = "macro";
  json rows = json::array();
  for (const RowResult& r : report.rows) {
    const RowInfo& info = row_info(r.row);
    json jr;
    jr["name"] = info.name;
    jr["stage"] = info.stage;
    jr["label"] = info.label;
    jr["features"] = r.features;
    jr["hidden"] = r.hidden;
    jr["status"] = r.ok ? "ok" : "failed";
    if (!r.ok) jr["error"] = r.error;
    jr["sensitivity"] = r.sensitivity;
    jr["specificity"] = r.specificity;
    jr["precision"] = r.precision;
    jr["f_measure"] = r.f_measure;
    jr["accuracy_mean"] = r.accuracy_mean;
    jr["accuracy_std"] = r.accuracy_std;
    json folds = json::array();
    for (const FoldResult& f : r.folds) {
      json jf;
      jf["fold"] = f.fold;
      jf["accuracy"] = f.metrics.accuracy;
      jf["sensitivity"] = f.metrics.sensitivity;
      jf["specificity"] = f.metrics.specificity;
      jf["precision"] = f.metrics.precision;
      jf["f_measure"] = f.metrics.f_measure;
      json cm = json::array();
      for (Eigen::Index i = 0; i < f.cm.counts.rows(); ++i) {
        json rowc = json::array();
        for (Eigen::Index k = 0; k < f.cm.counts.cols(); ++k) rowc.push_back(f.cm.counts(i, k));
        cm.push_back(rowc);
      }
      jf["confusion"] = cm;
      json degenerate = json::array();
      for (std::size_t c = 0; c < f.metrics.per_class.size(); ++c)
        if (f.metrics.per_class[c].degenerate) degenerate.push_back(c);
      jf["degenerate_classes"] = degenerate;
      folds.push_back(jf);
    }
    jr["fold_results"] = folds;
    rows.push_back(jr);
  }
  j["rows"] = rows;
  long fits = 0, transforms = 0;
  for (const AuditEvent& e : report.audit) (e.action == "fit" ? fits : transforms)++;
  j["audit"] = {{"fit_events", fits}, {"transform_events", transforms},
                {"leakage_violations", report.leakage_violations()}};
  return j;
}

std::string format_accuracy(double mean, double stddev) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f \xC2\xB1 %.1f", mean, stddev);
  return buf;
}

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

std::string feature_cell(const nlohmann::json& row, int image_side) {
  if (row.at("name") == "DICDM") return std::to_string(image_side) + "x" + std::to_string(image_side);
  return std::to_string(row.at("features").get<int>());
}

std::string pad(const std::string& s, std::size_t width) {
  // Width counts code points so the UTF-8 "±" occupies one column.
  std::size_t cols = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++cols;
  return cols >= width ? s : s + std::string(width - cols, ' ');
}

}  // namespace

std::string render_table(const nlohmann::json& report) {
  const int side = report.at("image_side").get<int>();
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"Model/Stage", "Classifier/Algorithm", "Pixel Size/Feature Number", "Sensitivity (%)",
                   "Specificity (%)", "Precision (%)", "F-measure (%)", "Accuracy (%)"});
  for (const auto& row : report.at("rows")) {
    std::vector<std::string> c{row.at("stage").get<std::string>(), row.at("label").get<std::string>(),
                               feature_cell(row, side)};
    if (row.at("status") == "ok") {
      c.push_back(pct(row.at("sensitivity").get<double>()));
      c.push_back(pct(row.at("specificity").get<double>()));
      c.push_back(pct(row.at("precision").get<double>()));
      c.push_back(pct(row.at("f_measure").get<double>()));
      c.push_back(format_accuracy(row.at("accuracy_mean").get<double>(), row.at("accuracy_std").get<double>()));
    } else {
      c.push_back("FAILED: " + row.at("error").get<std::string>());
    }
    cells.push_back(std::move(c));
  }
  std::vector<std::size_t> width(8, 0);
  for (const auto& r : cells)
    for (std::size_t i = 0; i < r.size(); ++i) {
      std::size_t cols = 0;
      for (unsigned char ch : r[i])
        if ((ch & 0xC0) != 0x80) ++cols;
      width[i] = std::max(width[i], cols);
    }
  std::ostringstream os;
  os << "Performance evaluation (" << report.at("folds").get<int>() << "-fold CV, seed "
     << report.at("seed").get<std::uint64_t>() << ", ELM " << report.at("elm_mode").get<std::string>()
     << ", macro-averaged; accuracy std = sample std over folds)\n";
  for (const auto& r : cells) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) os << " | ";
      os << (i + 1 < r.size() ? pad(r[i], width[i]) : r[i]);
    }
    os << '\n';
  }
  return os.str();
}

std::string render_csv(const nlohmann::json& report) {
  std::ostringstream os;
  os << "stage,algorithm,features,hidden,sensitivity,specificity,precision,f_measure,accuracy_mean,accuracy_std,"
        "status\n";
  for (const auto& row : report.at("rows")) {
    os << row.at("stage").get<std::string>() << ',' << row.at("name").get<std::string>() << ','
       << row.at("features").get<int>() << ',' << row.at("hidden").get<int>() << ','
       << nlohmann::json(row.at("sensitivity")).dump() << ',' << nlohmann::json(row.at("specificity")).dump() << ','
       << nlohmann::json(row.at("precision")).dump() << ',' << nlohmann::json(row.at("f_measure")).dump() << ','
       << nlohmann::json(row.at("accuracy_mean")).dump() << ',' << nlohmann::json(row.at("accuracy_std")).dump()
       << ',' << row.at("status").get<std::string>() << '\n';
  }
  return os.str();
}

}  // namespace leafpipe
