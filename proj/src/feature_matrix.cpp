#include "leafpipe/feature_matrix.hpp"

#include "leafpipe/errors.hpp"

namespace leafpipe {

Standardization Standardization::fit(const Eigen::MatrixXd& x) {
  if (x.rows() < 2) throw ArgumentError("standardize: need at least 2 rows");
  Standardization s;
  s.mean = x.colwise().mean();
  s.std = ((x.rowwise() - s.mean).array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt();
  for (Eigen::Index j = 0; j < s.std.size(); ++j) {
    if (x.col(j).minCoeff() == x.col(j).maxCoeff()) {
      s.mean(j) = x(0, j);
      s.std(j) = 1.0;
    } else if (!(s.std(j) > 0)) {
      s.std(j) = 1.0;
    }
  }
  return s;
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) throw ArgumentError("standardize: column count mismatch");
  return (x.rowwise() - mean).array().rowwise() / std.array();
}

void FeatureMatrix::validate() const {
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != values.cols())
    throw ArgumentError("feature matrix: names do not match column count");
  if (static_cast<Eigen::Index>(labels.size()) != values.rows())
    throw ArgumentError("feature matrix: labels do not match row count");
  if (!sample_ids.empty() && static_cast<Eigen::Index>(sample_ids.size()) != values.rows())
    throw ArgumentError("feature matrix: sample ids do not match row count");
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<int>& idx) const {
  FeatureMatrix out;
  out.values = values(idx, Eigen::all);
  out.names = names;
  out.standardization = standardization;
  for (int i : idx) {
    out.labels.push_back(labels.at(i));
    if (!sample_ids.empty()) out.sample_ids.push_back(sample_ids.at(i));
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_cols(const std::vector<int>& idx) const {
  FeatureMatrix out;
  out.values = values(Eigen::all, idx);
  for (int j : idx)
    if (!names.empty()) out.names.push_back(names.at(j));
  out.labels = labels;
  out.sample_ids = sample_ids;
  return out;
}

FeatureMatrix standardize_fit_apply(const FeatureMatrix& m) {
  FeatureMatrix out = m;
  out.standardization = Standardization::fit(m.values);
  out.values = out.standardization->apply(m.values);
  return out;
}

FeatureMatrix standardize_apply(const FeatureMatrix& m, const Standardization& s) {
  FeatureMatrix out = m;
  out.values = s.apply(m.values);
  out.standardization = s;
  return out;
}

}  // namespace leafpipe
