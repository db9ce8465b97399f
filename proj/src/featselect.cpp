#include "leafpipe/featselect.hpp"

#include "leafpipe/errors.hpp"
#include "leafpipe/parallel.hpp"
#include "leafpipe/random.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>

namespace leafpipe {

std::string to_string(SelectorMethod m) {
  switch (m) {
    case SelectorMethod::anova_f: return "anova_f";
    case SelectorMethod::chi_square: return "chi_square";
    case SelectorMethod::random_forest: return "random_forest";
  }
  return "?";
}

SelectorMethod selector_method_from_string(const std::string& s) {
  if (s == "anova_f" || s == "anova") return SelectorMethod::anova_f;
  if (s == "chi_square" || s == "chi2") return SelectorMethod::chi_square;
  if (s == "random_forest" || s == "rf") return SelectorMethod::random_forest;
  throw ArgumentError("unknown selector method '" + s + "'");
}

namespace {

std::map<int, std::vector<int>> group_by_label(const FeatureMatrix& m) {
  m.validate();
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < static_cast<int>(m.labels.size()); ++i) groups[m.labels[i]].push_back(i);
  return groups;
}

}  // namespace

Eigen::VectorXd anova_f_scores(const FeatureMatrix& m) {
  const auto groups = group_by_label(m);
  if (groups.size() < 2) throw ArgumentError("anova: need at least 2 classes");
  for (const auto& [label, rows] : groups)
    if (rows.size() < 2) throw ArgumentError("anova: class " + std::to_string(label) + " has fewer than 2 samples");
  const double n = static_cast<double>(m.rows());
  const double k = static_cast<double>(groups.size());
  const Eigen::RowVectorXd grand = m.values.colwise().mean();
  Eigen::RowVectorXd between = Eigen::RowVectorXd::Zero(m.cols());
  Eigen::RowVectorXd within = Eigen::RowVectorXd::Zero(m.cols());
  for (const auto& [label, rows] : groups) {
    const Eigen::MatrixXd block = m.values(rows, Eigen::all);
    const Eigen::RowVectorXd mean = block.colwise().mean();
    between += static_cast<double>(rows.size()) * (mean - grand).array().square().matrix();
    within += (block.rowwise() - mean).array().square().colwise().sum().matrix();
  }
  const Eigen::RowVectorXd ms_between = between / (k - 1);
  const Eigen::RowVectorXd ms_within = within / (n - k);
  Eigen::VectorXd f(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    // Relative tolerances absorb round-off in exactly-equal class means.
    const double scale = m.values.col(j).squaredNorm() / n + 1e-300;
    const bool zero_between = ms_between(j) <= 1e-24 * scale;
    const bool zero_within = ms_within(j) <= 1e-24 * scale;
    if (zero_within)
      f(j) = zero_between ? 0.0 : kAnovaCap;
    else
      f(j) = zero_between ? 0.0 : std::min(kAnovaCap, ms_between(j) / ms_within(j));
  }
  return f;
}

Eigen::VectorXd chi_square_scores(const FeatureMatrix& m) {
  const auto groups = group_by_label(m);
  const double n = static_cast<double>(m.rows());
  const Eigen::RowVectorXd lo = m.values.colwise().minCoeff();
  Eigen::RowVectorXd range = m.values.colwise().maxCoeff() - lo;
  Eigen::VectorXd chi = Eigen::VectorXd::Zero(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (!(range(j) > 0)) continue;  // constant column: observed equals expected
    const Eigen::VectorXd col = (m.values.col(j).array() - lo(j)) / range(j);
    const double total = col.sum();
    if (!(total > 0)) continue;
    for (const auto& [label, rows] : groups) {
      double observed = 0;
      for (int i : rows) observed += col(i);
      const double expected = static_cast<double>(rows.size()) / n * total;
      if (expected > 0) chi(j) += (observed - expected) * (observed - expected) / expected;
    }
  }
  return chi;
}

namespace {

struct TreeBuilder {
  const Eigen::MatrixXd& x;
  const std::vector<int>& y;  // dense labels 0..classes-1
  int classes;
  const ForestParams& params;
  int mtry;
  Rng& rng;
  double total_samples;
  Eigen::VectorXd importance;

  static double gini(const std::vector<double>& counts, double n) {
    double s = 0;
    for (double c : counts) s += c * c;
    return 1.0 - s / (n * n);
  }

  void grow(std::vector<int>& rows, int depth) {
    const double n = static_cast<double>(rows.size());
    std::vector<double> counts(classes, 0.0);
    for (int r : rows) counts[y[r]] += 1;
    const double node_gini = gini(counts, n);
    if (depth >= params.max_depth || node_gini <= 0 || rows.size() < 2u * params.min_leaf) return;

    // Candidate features: partial Fisher-Yates draw without replacement.
    std::vector<int> features(static_cast<std::size_t>(x.cols()));
    std::iota(features.begin(), features.end(), 0);
    for (int i = 0; i < mtry; ++i) std::swap(features[i], features[i + rng.index(features.size() - i)]);

    int best_feature = -1;
    double best_threshold = 0, best_gain = 0;
    std::vector<std::pair<double, int>> sorted(rows.size());
    std::vector<double> left(classes);
    for (int c = 0; c < mtry; ++c) {
      const int f = features[c];
      for (std::size_t i = 0; i < rows.size(); ++i) sorted[i] = {x(rows[i], f), y[rows[i]]};
      std::sort(sorted.begin(), sorted.end());
      std::fill(left.begin(), left.end(), 0.0);
      double left_sq = 0, right_sq = 0;
      for (double cnt : counts) right_sq += cnt * cnt;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const int cls = sorted[i].second;
        const double right_before = counts[cls] - left[cls];
        left_sq += 2 * left[cls] + 1;
        right_sq -= 2 * right_before - 1;
        left[cls] += 1;
        const double nl = static_cast<double>(i + 1), nr = n - nl;
        if (nl < params.min_leaf || nr < params.min_leaf) continue;
        if (!(sorted[i].first < sorted[i + 1].first)) continue;
        // n * G - nl * Gl - nr * Gr
        const double gain = n * node_gini - (nl - left_sq / nl) - (nr - right_sq / nr);
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_feature = f;
          best_threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
        }
      }
    }
    if (best_feature < 0) return;
    importance(best_feature) += best_gain / total_samples;

    std::vector<int> lrows, rrows;
    for (int r : rows) (x(r, best_feature) <= best_threshold ? lrows : rrows).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    grow(lrows, depth + 1);
    grow(rrows, depth + 1);
  }
};

}  // namespace

Eigen::VectorXd rf_importance(const FeatureMatrix& m, const ForestParams& params, std::uint64_t seed, int jobs) {
  const auto groups = group_by_label(m);
  if (m.rows() < 10) throw ArgumentError("random forest: need at least 10 rows");
  if (params.trees < 1) throw ArgumentError("random forest: need at least one tree");
  const Eigen::Index d = m.cols();
  if (groups.size() < 2) {
    std::clog << "warning: random forest: single-class input, importances are zero\n";
    return Eigen::VectorXd::Zero(d);
  }
  std::vector<int> dense(m.labels.size());
  int classes = 0;
  for (const auto& [label, rows] : groups) {
    for (int r : rows) dense[r] = classes;
    ++classes;
  }
  const int mtry = params.max_features > 0 ? std::min<int>(params.max_features, static_cast<int>(d))
                                           : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));

  std::vector<Eigen::VectorXd> per_tree(static_cast<std::size_t>(params.trees));
  parallel_for(per_tree.size(), jobs, [&](std::size_t t) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    const std::size_t n = m.labels.size();
    std::vector<int> rows(n);
    for (auto& r : rows) r = static_cast<int>(rng.index(n));
    TreeBuilder builder{m.values, dense, classes, params, mtry, rng, static_cast<double>(n), Eigen::VectorXd::Zero(d)};
    builder.grow(rows, 0);
    per_tree[t] = std::move(builder.importance);
  });

  Eigen::VectorXd importance = Eigen::VectorXd::Zero(d);
  for (const auto& v : per_tree) importance += v;
  importance /= static_cast<double>(params.trees);
  const double total = importance.sum();
  if (total > 0) importance /= total;
  return importance;
}

std::vector<int> top_k(const Eigen::VectorXd& scores, int k) {
  if (k < 1 || k > scores.size()) throw ArgumentError("select: k=" + std::to_string(k) + " out of range");
  std::vector<int> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores(a) > scores(b); });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

SelectorModel selector_fit(const FeatureMatrix& m, SelectorMethod method, int k, std::uint64_t seed,
                           const ForestParams& forest, int jobs) {
  SelectorModel model;
  model.method = method;
  model.k = k;
  model.dictionary = m.names;
  switch (method) {
    case SelectorMethod::anova_f: model.scores = anova_f_scores(m); break;
    case SelectorMethod::chi_square: model.scores = chi_square_scores(m); break;
    case SelectorMethod::random_forest: model.scores = rf_importance(m, forest, seed, jobs); break;
  }
  model.selected = top_k(model.scores, k);
  return model;
}

FeatureMatrix select(const FeatureMatrix& m, const SelectorModel& model) {
  // Already projected: selecting again is a no-op.
  if (m.names.size() == model.selected.size() && m.names.size() < model.dictionary.size()) {
    bool same = true;
    for (std::size_t i = 0; i < m.names.size() && same; ++i)
      same = m.names[i] == model.dictionary[static_cast<std::size_t>(model.selected[i])];
    if (same) return m;
  }
  if (m.names != model.dictionary) throw DictionaryMismatch("select: feature names differ from the fitted dictionary");
  return m.select_cols(model.selected);
}

}  // namespace leafpipe
