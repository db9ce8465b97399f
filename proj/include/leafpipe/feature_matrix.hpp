#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace leafpipe {

/// Per-column z-score statistics fitted on a training matrix.
struct Standardization {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd std;  // population std; 1 for constant columns

  static Standardization fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

/// n_samples x n_features table with canonical column names and integer labels.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> names;
  std::vector<int> labels;
  std::vector<std::string> sample_ids;
  std::optional<Standardization> standardization;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  /// Throws ArgumentError when names/labels/sample_ids disagree with the shape.
  void validate() const;

  FeatureMatrix select_rows(const std::vector<int>& idx) const;
  FeatureMatrix select_cols(const std::vector<int>& idx) const;
};

/// Fits z-score statistics on m (rows >= 2) and returns the standardized matrix
/// with the statistics recorded for held-out data.
FeatureMatrix standardize_fit_apply(const FeatureMatrix& m);

/// Applies previously fitted statistics.
FeatureMatrix standardize_apply(const FeatureMatrix& m, const Standardization& s);

}  // namespace leafpipe
