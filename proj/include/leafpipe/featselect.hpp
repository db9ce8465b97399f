#pragma once

#include "leafpipe/feature_matrix.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace leafpipe {

inline constexpr int kAnovaSelected = 50;
inline constexpr int kChiSquareSelected = 40;
inline constexpr int kForestSelected = 35;

/// Score cap for features with zero within-class variance.
inline constexpr double kAnovaCap = 1e12;

enum class SelectorMethod { anova_f, chi_square, random_forest };

std::string to_string(SelectorMethod m);
SelectorMethod selector_method_from_string(const std::string& s);

/// One-way ANOVA F per column. Requires >= 2 classes with >= 2 samples each.
Eigen::VectorXd anova_f_scores(const FeatureMatrix& m);

/// Chi-square per column after per-column min-max rescaling: O_k is the
/// feature sum over class k, E_k = (n_k / N) * total.
Eigen::VectorXd chi_square_scores(const FeatureMatrix& m);

struct ForestParams {
  int trees = 100;
  int max_depth = 12;
  int min_leaf = 2;
  int max_features = 0;  // 0 means floor(sqrt(d))
};

/// Mean decrease in Gini impurity over a bootstrap forest, normalized to sum
/// to 1. Single-class input yields all zeros. Trees are grown on up to `jobs`
/// threads; tree t uses derive_seed(seed, {t}).
Eigen::VectorXd rf_importance(const FeatureMatrix& m, const ForestParams& params, std::uint64_t seed, int jobs = 1);

struct SelectorModel {
  SelectorMethod method = SelectorMethod::anova_f;
  Eigen::VectorXd scores;
  std::vector<int> selected;  // ascending column indices
  int k = 0;
  std::vector<std::string> dictionary;  // column names the scores refer to
};

/// The k highest-scoring indices (lower index first on equal scores), sorted ascending.
std::vector<int> top_k(const Eigen::VectorXd& scores, int k);

SelectorModel selector_fit(const FeatureMatrix& m, SelectorMethod method, int k, std::uint64_t seed = 0,
                           const ForestParams& forest = {}, int jobs = 1);

/// Column subset; throws DictionaryMismatch if m's names differ from the model's.
/// A matrix that already holds exactly the selected columns is returned as is.
FeatureMatrix select(const FeatureMatrix& m, const SelectorModel& model);

}  // namespace leafpipe
