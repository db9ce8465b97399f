#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "../synth_features.hpp"
#include "leafpipe/errors.hpp"
#include "leafpipe/featselect.hpp"
#include "leafpipe/random.hpp"

#include <numeric>

using namespace leafpipe;

namespace {

FeatureMatrix make(const Eigen::MatrixXd& v, std::vector<int> labels) {
  FeatureMatrix m;
  m.values = v;
  for (Eigen::Index j = 0; j < v.cols(); ++j) m.names.push_back("c" + std::to_string(j));
  for (Eigen::Index i = 0; i < v.rows(); ++i) m.sample_ids.push_back(std::to_string(i));
  m.labels = std::move(labels);
  return m;
}

FeatureMatrix random_labelled(int n, int d, int classes, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, d);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = i % classes;
    for (int j = 0; j < d; ++j) x(i, j) = rng.uniform() + 0.3 * y[i] * (j % 3 == 0);
  }
  return make(x, y);
}

// Textbook one-way ANOVA.
double anova_oracle(const Eigen::VectorXd& v, const std::vector<int>& y) {
  std::map<int, std::vector<double>> g;
  for (size_t i = 0; i < y.size(); ++i) g[y[i]].push_back(v(static_cast<Eigen::Index>(i)));
  const double grand = v.mean();
  double ssb = 0, ssw = 0;
  for (auto& [k, xs] : g) {
    const double mk = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    ssb += static_cast<double>(xs.size()) * (mk - grand) * (mk - grand);
    for (double x : xs) ssw += (x - mk) * (x - mk);
  }
  const double kk = static_cast<double>(g.size()), n = static_cast<double>(y.size());
  return (ssb / (kk - 1)) / (ssw / (n - kk));
}

}  // namespace

TEST_CASE("anova examples") {
  Eigen::MatrixXd x(4, 3);
  x << 1, 5, 1, 2, 7, 1, 3, 5, 2, 4, 7, 2;
  const Eigen::VectorXd f = anova_f_scores(make(x, {0, 0, 1, 1}));
  CHECK(f(0) == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(std::abs(f(1)) < 1e-12);
  CHECK(f(2) == kAnovaCap);

  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(4, 1, 3.0);
  CHECK(anova_f_scores(make(c, {0, 0, 1, 1}))(0) == 0);
  CHECK_THROWS_AS(anova_f_scores(make(x.topRows(3), {0, 0, 1})), ArgumentError);
  CHECK_THROWS_AS(anova_f_scores(make(x, {0, 0, 0, 0})), ArgumentError);

  const FeatureMatrix r = random_labelled(40, 6, 3, 1);
  const Eigen::VectorXd got = anova_f_scores(r);
  for (int j = 0; j < 6; ++j) CHECK(got(j) == doctest::Approx(anova_oracle(r.values.col(j), r.labels)).epsilon(1e-10));
}

TEST_CASE("chi-square examples") {
  Eigen::MatrixXd x(4, 3);
  x << 1, 2, 0, 1, 2, 0, 0, 2, 0, 0, 2, 0;
  const Eigen::VectorXd c = chi_square_scores(make(x, {0, 0, 1, 1}));
  CHECK(c(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(c(1) == 0);
  CHECK(c(2) == 0);

  // Hand evaluation on a rescaled column: {0, 0.5, 1, 1} with classes {0,0,1,1}.
  Eigen::MatrixXd h(4, 1);
  h << 10, 11, 12, 12;
  const double o0 = 0.5, o1 = 2.0, e = 1.25;
  CHECK(chi_square_scores(make(h, {0, 0, 1, 1}))(0) ==
        doctest::Approx((o0 - e) * (o0 - e) / e + (o1 - e) * (o1 - e) / e).epsilon(1e-14));
}

TEST_CASE("scores under column permutation and sample duplication") {
  const FeatureMatrix m = random_labelled(30, 8, 3, 2);
  std::vector<int> perm{3, 7, 0, 5, 1, 6, 2, 4};
  const FeatureMatrix p = m.select_cols(perm);
  const Eigen::VectorXd f = anova_f_scores(m), fp = anova_f_scores(p);
  const Eigen::VectorXd c = chi_square_scores(m), cp = chi_square_scores(p);
  for (int j = 0; j < 8; ++j) {
    CHECK(fp(j) == f(perm[j]));
    CHECK(cp(j) == c(perm[j]));
  }

  FeatureMatrix dup = m;
  dup.values.resize(60, 8);
  dup.values << m.values, m.values;
  dup.labels.insert(dup.labels.end(), m.labels.begin(), m.labels.end());
  dup.sample_ids.insert(dup.sample_ids.end(), m.sample_ids.begin(), m.sample_ids.end());
  const double n = 30, k = 3;
  const Eigen::VectorXd fd = anova_f_scores(dup), cd = chi_square_scores(dup);
  for (int j = 0; j < 8; ++j) {
    CHECK(fd(j) == doctest::Approx(f(j) * (2 * n - k) / (n - k)).epsilon(1e-10));
    CHECK(cd(j) == doctest::Approx(2 * c(j)).epsilon(1e-10));
  }
  CHECK(top_k(fd, 3) == top_k(f, 3));
  CHECK(top_k(cd, 3) == top_k(c, 3));
}

TEST_CASE("top_k ordering and ties") {
  Eigen::VectorXd s(6);
  s << 1, 5, 5, 0, 7, 5;
  CHECK(top_k(s, 2) == std::vector<int>{1, 4});
  CHECK(top_k(s, 3) == std::vector<int>{1, 2, 4});
  CHECK(top_k(s, 6) == std::vector<int>{0, 1, 2, 3, 4, 5});
  CHECK_THROWS_AS(top_k(s, 0), ArgumentError);
  CHECK_THROWS_AS(top_k(s, 7), ArgumentError);
}

TEST_CASE("random forest finds a planted feature") {
  int first = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed(seed, {99}));
    const int n = 60, d = 10;
    const int planted = static_cast<int>(seed % d);
    Eigen::MatrixXd x(n, d);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      y[i] = i % 2;
      for (int j = 0; j < d; ++j) x(i, j) = rng.uniform();
      x(i, planted) = y[i] + rng.uniform(0.0, 0.9);
    }
    const Eigen::VectorXd imp = rf_importance(make(x, y), {}, seed);
    Eigen::Index best = 0;
    imp.maxCoeff(&best);
    first += best == planted;
    CHECK(std::abs(imp.sum() - 1) < 1e-9);
    CHECK(imp.minCoeff() >= 0);
  }
  MESSAGE("planted feature ranked first in " << first << "/100 seeds");
  CHECK(first >= 95);
}

TEST_CASE("random forest edge cases and reproducibility") {
  const FeatureMatrix m = random_labelled(40, 12, 3, 4);
  ForestParams p;
  p.trees = 30;
  const Eigen::VectorXd a = rf_importance(m, p, 5, 1);
  CHECK(rf_importance(m, p, 5, 1) == a);
  CHECK(rf_importance(m, p, 5, 3) == a);
  CHECK(rf_importance(m, p, 6, 1) != a);

  FeatureMatrix single = m;
  std::fill(single.labels.begin(), single.labels.end(), 2);
  CHECK(rf_importance(single, p, 5).isZero());
  CHECK_THROWS_AS(rf_importance(m.select_rows({0, 1, 2, 3, 4, 5, 6, 7, 8}), p, 5), ArgumentError);
}

TEST_CASE("select") {
  const FeatureMatrix m = random_labelled(20, 6, 2, 7);
  SelectorModel model = selector_fit(m, SelectorMethod::anova_f, 6);
  CHECK(select(m, model).values == m.values);
  CHECK(select(m, model).names == m.names);

  model.selected = {0, 5};
  model.k = 2;
  const FeatureMatrix s = select(m, model);
  CHECK(s.names == std::vector<std::string>{"c0", "c5"});
  CHECK(s.values.col(1) == m.values.col(5));
  CHECK(select(s, model).values == s.values);

  FeatureMatrix other = m;
  other.names[2] = "zz";
  CHECK_THROWS_AS(select(other, model), DictionaryMismatch);
  CHECK_THROWS_AS(select(other, model), ArgumentError);
  CHECK_THROWS_AS(select(m.select_cols({0, 1, 2}), model), ArgumentError);

  const SelectorModel fit = selector_fit(m, SelectorMethod::chi_square, 3);
  CHECK(fit.selected.size() == 3);
  CHECK(std::is_sorted(fit.selected.begin(), fit.selected.end()));
  CHECK(fit.scores.allFinite());
  CHECK(to_string(SelectorMethod::random_forest) == to_string(selector_method_from_string(to_string(SelectorMethod::random_forest))));
  CHECK_THROWS_AS(selector_method_from_string("lasso"), ArgumentError);
}

TEST_CASE("default selections on generator features") {
  const FeatureMatrix m = testsupport::synth_features(12);
  const SelectorModel a = selector_fit(m, SelectorMethod::anova_f, kAnovaSelected);
  CHECK(a.selected.size() == 50);
  CHECK(a.scores.allFinite());
  bool glcm = false;
  for (int i : a.selected) glcm = glcm || m.names[i].rfind("glcm.", 0) == 0;
  CHECK(glcm);
  CHECK(select(m, selector_fit(m, SelectorMethod::chi_square, kChiSquareSelected)).cols() == 40);
  CHECK(select(m, selector_fit(m, SelectorMethod::random_forest, kForestSelected, 3)).cols() == 35);
}
