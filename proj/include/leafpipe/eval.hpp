#pragma once

#include "leafpipe/dimred.hpp"
#include "leafpipe/elm.hpp"
#include "leafpipe/feature_matrix.hpp"
#include "leafpipe/featselect.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace leafpipe {

/// counts(t, p): samples of true class t predicted as p.
struct ConfusionMatrix {
  Eigen::MatrixXi counts;
  long total() const { return counts.sum(); }
};

ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& predicted, int classes = kNumClasses);

struct ClassMetrics {
  double sensitivity = 0;
  double specificity = 0;
  double precision = 0;
  double f_measure = 0;
  bool degenerate = false;  // some ratio was 0/0 and was set to 0
};

struct MetricsReport {
  std::vector<ClassMetrics> per_class;
  double sensitivity = 0;  // macro averages
  double specificity = 0;
  double precision = 0;
  double f_measure = 0;
  double accuracy = 0;  // percent, trace / total
};

/// One-vs-rest counts per class, 0/0 ratios defined as 0.
MetricsReport metrics(const ConfusionMatrix& cm);

/// k disjoint test folds; each class is shuffled with the seed and dealt
/// round-robin, continuing the fold cursor across classes.
std::vector<std::vector<int>> stratified_kfold(const std::vector<int>& labels, int k, std::uint64_t seed);

enum class ExperimentRow {
  dicdm, texture, glcm, gldm, fft, dwt, all, frequency, spatial,
  pca, kpca, sparse_ae, stacked_ae, anova, chi_square, random_forest
};

inline constexpr int kExperimentRowCount = 16;

struct RowInfo {
  const char* name;   // CLI / report identifier
  const char* stage;  // DICDM, FEAs, DRAs, FSAs
  const char* label;  // display label
};

const RowInfo& row_info(ExperimentRow row);
std::vector<ExperimentRow> all_rows();
/// "all" or a comma-separated list of row names (case-insensitive).
std::vector<ExperimentRow> parse_rows(const std::string& list);

struct ExperimentSettings {
  int folds = 10;
  std::uint64_t seed = 0;
  int jobs = 1;
  ElmConfig elm;  // mode, ridge and optimizer settings; dimensions are set per row
  int pca_components = kPcaComponents;
  int kpca_components = kKpcaComponents;
  std::optional<double> kpca_gamma;
  int sparse_ae_bottleneck = kSparseAeBottleneck;
  int stacked_ae_bottleneck = kStackedAeBottleneck;
  int stacked_ae_intermediate = kStackedAeIntermediate;
  AeTraining autoencoder;
  int anova_k = kAnovaSelected;
  int chi_square_k = kChiSquareSelected;
  int forest_k = kForestSelected;
  ForestParams forest;
  std::string config_hash;
};

struct ExperimentInputs {
  FeatureMatrix features;  // raw 252-column matrix with labels
  Eigen::MatrixXd pixels;  // one flattened masked image per row
  int image_side = 0;
  std::vector<std::string> class_names;
};

struct FoldResult {
  int fold = 0;
  ConfusionMatrix cm;
  MetricsReport metrics;
};

struct RowResult {
  ExperimentRow row{};
  int features = 0;
  int hidden = 0;
  bool ok = true;
  std::string error;
  std::vector<FoldResult> folds;
  double sensitivity = 0, specificity = 0, precision = 0, f_measure = 0;  // fold means
  double accuracy_mean = 0, accuracy_std = 0;  // percent; sample std over folds
};

/// One fit or transform call made while evaluating a fold.
struct AuditEvent {
  ExperimentRow row{};
  int fold = 0;
  std::string stage;
  std::string action;  // fit | transform
  std::string subset;  // train | test
  int rows = 0;
  bool touches_test_rows = false;
};

struct ExperimentReport {
  std::uint64_t seed = 0;
  int folds = 0;
  std::string config_hash;
  std::string elm_mode;
  std::vector<std::string> class_names;
  int image_side = 0;
  std::vector<RowResult> rows;
  std::vector<AuditEvent> audit;

  /// Fit events whose rows intersect the fold's test set.
  long leakage_violations() const;
};

/// Runs each requested row under stratified k-fold CV. Every transform and the
/// classifier are fitted on the training fold only. A failing row is reported
/// with its error and the remaining rows still run.
ExperimentReport run_experiment(const ExperimentInputs& inputs, const std::vector<ExperimentRow>& rows,
                                const ExperimentSettings& settings);

inline constexpr int kReportSchemaVersion = 1;

nlohmann::json report_to_json(const ExperimentReport& report);

/// Fixed-width text table rendered from a report document.
std::string render_table(const nlohmann::json& report);
std::string render_csv(const nlohmann::json& report);

/// "mean ± std": two decimals on the mean, one on the std.
std::string format_accuracy(double mean, double stddev);

}  // namespace leafpipe
