// Prints one PASS/FAIL line per acceptance criterion; exit status 1 if any fail.
#include "../oracles.hpp"
#include "../support.hpp"
#include "../synth_features.hpp"
#include "leafpipe/dimred.hpp"
#include "leafpipe/elm.hpp"
#include "leafpipe/errors.hpp"
#include "leafpipe/eval.hpp"
#include "leafpipe/featselect.hpp"
#include "leafpipe/features.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <sys/wait.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

using namespace leafpipe;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream notes;
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      notes << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int n, const char* title, double limit_s, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.ok = false;
    c.notes << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs >= limit_s) {
    c.ok = false;
    c.notes << " [took " << secs << " s, limit " << limit_s << " s]";
  }
  if (!c.ok) ++failures;
  std::printf("%s %d %s (%.2f s)%s\n", c.ok ? "PASS" : "FAIL", n, title, secs, c.notes.str().c_str());
  std::fflush(stdout);
}

SegmentedImage full(const ImageGray& g) {
  return {g, BinaryMask::Constant(g.rows(), g.cols(), true), 0.0, false};
}

ImageGray random_gray(int h, int w, Rng& rng) {
  ImageGray g(h, w);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.uniform();
  return g;
}

FeatureMatrix make(const Eigen::MatrixXd& v, std::vector<int> labels = {}) {
  FeatureMatrix m;
  m.values = v;
  for (Eigen::Index j = 0; j < v.cols(); ++j) m.names.push_back("c" + std::to_string(j));
  for (Eigen::Index i = 0; i < v.rows(); ++i) m.sample_ids.push_back(std::to_string(i));
  if (labels.empty()) labels.assign(static_cast<size_t>(v.rows()), 0);
  m.labels = std::move(labels);
  return m;
}

Eigen::MatrixXd random_matrix(int r, int c, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(r, c);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
  return x;
}

double max_diff_up_to_sign(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double worst = 0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    worst = std::max(worst, std::min((a.col(j) - b.col(j)).cwiseAbs().maxCoeff(),
                                     (a.col(j) + b.col(j)).cwiseAbs().maxCoeff()));
  return worst;
}

int run(const std::string& args) {
  const std::string cmd = std::string("'") + LEAFPIPE_CLI + "' " + args;
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

void feature_arithmetic(Check& c) {
  namespace fl = feature_layout;
  c.expect(fl::kTextureCount == 14 && fl::kGlcmCount == 56 && fl::kGldmCount == 56 && fl::kFftCount == 14 &&
               fl::kDwtCount == 112,
           "block sizes 14/56/56/14/112");
  c.expect(fl::kSpatialCount == 126 && fl::kFrequencyCount == 126, "spatial/frequency 126/126");
  const SynthSample s = synth_image(1, 1.0, 7, 64);
  const FeatureVector v = extract_all(segment_leaf(s.image));
  c.expect(v.values.size() == 252, "extract_all length");
  c.expect(feature_names().size() == 252, "name count");
  c.notes << " 252 = 14+56+56+14+112";
}

void oracle_equivalences(Check& c) {
  Rng rng(2024);
  double glcm_err = 0;
  int glcm_runs = 0;
  for (int t = 0; t < 50; ++t) {
    SegmentedImage s = full(random_gray(8, 8, rng));
    for (Orientation o : kOrientations) {
      const auto [dx, dy] = orientation_offset(o, 1);
      glcm_err = std::max(glcm_err, (glcm_compute(s, o, 1, 8).p - oracle::glcm(s, dx, dy, 8)).cwiseAbs().maxCoeff());
      ++glcm_runs;
    }
  }
  c.expect(glcm_err < 1e-8, "GLCM vs pair enumeration");

  double dft_err = 0, feat_err = 0;
  for (int t = 0; t < 20; ++t) {
    const ImageGray g = random_gray(8, 8, rng);
    const Plane<double> want = oracle::dft_magnitude(g);
    dft_err = std::max(dft_err, (dft2_magnitude(g) - want).abs().maxCoeff());
    const auto f = fft_features(full(g));
    const auto o = stat14(want).as_vector();
    feat_err = std::max(feat_err, (f - o).cwiseAbs().maxCoeff());
  }
  c.expect(dft_err < 1e-8, "DFT magnitude vs direct sum");
  c.expect(feat_err < 1e-8, "FFT features vs direct-DFT statistics");

  double recon = 0, energy = 0;
  for (int t = 0; t < 20; ++t) {
    const ImageGray g = random_gray(16, 16, rng);
    const HaarLevel l1 = haar_level(g);
    const HaarLevel l2 = haar_level(l1.ll);
    auto e = [](const HaarLevel& h) {
      return h.ll.square().sum() + h.lh.square().sum() + h.hl.square().sum() + h.hh.square().sum();
    };
    recon = std::max(recon, (haar_inverse(l1) - g).abs().maxCoeff());
    energy = std::max({energy, std::abs(e(l1) - g.square().sum()) / g.square().sum(),
                       std::abs(e(l2) - l1.ll.square().sum()) / l1.ll.square().sum()});
  }
  c.expect(recon < 1e-9, "Haar perfect reconstruction");
  c.expect(energy < 1e-9, "Haar energy conservation");

  const Eigen::MatrixXd x = random_matrix(20, 6, 77);
  const int k = 4;
  const Eigen::MatrixXd centred = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = centred.transpose() * centred / 19.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(cov);
  std::vector<std::pair<double, Eigen::VectorXd>> pairs;
  for (int i = 0; i < 6; ++i) pairs.emplace_back(es.eigenvalues()(i).real(), es.eigenvectors().col(i).real().normalized());
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  Eigen::MatrixXd w(6, k);
  for (int j = 0; j < k; ++j) {
    w.col(j) = pairs[j].second;
    Eigen::Index at = 0;
    w.col(j).cwiseAbs().maxCoeff(&at);
    if (w(at, j) < 0) w.col(j) *= -1;
  }
  const FeatureMatrix m = make(x);
  const PcaModel pm = pca_fit(m, k);
  const double pca_err = (pca_transform(pm, m).values - centred * w).cwiseAbs().maxCoeff();
  c.expect(pca_err < 1e-8, "PCA vs covariance eigendecomposition");
  const double kpca_err =
      max_diff_up_to_sign(pca_transform(pm, m).values, kpca_transform(kpca_fit(m, k, 0.0, Kernel::linear), m).values);
  c.expect(kpca_err < 1e-6, "linear KPCA vs PCA");
  c.notes << " glcm " << glcm_err << " over " << glcm_runs << ", dft " << dft_err << ", fft-stats " << feat_err
          << ", haar " << recon << "/" << energy << ", pca " << pca_err << ", kpca " << kpca_err;
}

void selector_oracles(Check& c) {
  Eigen::MatrixXd a(4, 1);
  a << 1, 2, 3, 4;
  const double f = anova_f_scores(make(a, {0, 0, 1, 1}))(0);
  c.expect(std::abs(f - 8.0) < 1e-12, "ANOVA F = 8");
  Eigen::MatrixXd b(4, 1);
  b << 1, 1, 0, 0;
  const double chi = chi_square_scores(make(b, {0, 0, 1, 1}))(0);
  c.expect(std::abs(chi - 2.0) < 1e-12, "chi-square = 2");
  int first = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed(seed, {0x5e1}));
    const int n = 80, d = 10, planted = static_cast<int>(seed % d);
    Eigen::MatrixXd x(n, d);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      y[i] = i % 2;
      for (int j = 0; j < d; ++j) x(i, j) = rng.uniform();
      x(i, planted) = y[i] + rng.uniform(0.0, 0.9);
    }
    Eigen::Index best = 0;
    rf_importance(make(x, y), {}, seed).maxCoeff(&best);
    first += best == planted;
  }
  c.expect(first >= 95, "planted feature first in >= 95/100 seeds");
  c.notes << " F=" << f << " chi2=" << chi << " planted first " << first << "/100";
}

void elm_exactness(Check& c) {
  Rng rng(31);
  const int n = 120, d = 8;
  Eigen::MatrixXd x(n, d);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = i % 6;
    for (int j = 0; j < d; ++j) x(i, j) = rng.uniform(-1, 1) + (j == y[i] ? 1.0 : 0.0);
  }
  ElmConfig cfg = ElmConfig::fadm(d, 5);
  const ElmModel m = elm_train(x, y, cfg);
  const Eigen::MatrixXd h = elm_hidden(m, x);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, 6);
  for (int i = 0; i < n; ++i) t(i, y[i]) = 1;
  const Eigen::MatrixXd rhs = h.transpose() * t;
  const double rel = (h.transpose() * h * m.output_weights + cfg.ridge * m.output_weights - rhs).norm() / rhs.norm();
  c.expect(rel < 1e-6, "ridge normal equations");

  Eigen::MatrixXd tx(20, 2);
  std::vector<int> ty(20);
  for (int i = 0; i < 20; ++i) {
    ty[i] = i % 2;
    tx(i, 0) = ty[i] ? rng.uniform(0.5, 2.0) : rng.uniform(-2.0, -0.5);
    tx(i, 1) = rng.uniform(-2, 2);
  }
  ElmConfig tc;
  tc.input_dim = 2;
  tc.hidden_dim = 40;
  tc.classes = 2;
  c.expect(elm_predict(elm_train(tx, ty, tc), tx) == ty, "separable toy set at 100%");

  AutoencoderModel ae = ae_init({6, 4, 6}, 1, 0.2, 0.5, 3);
  Eigen::MatrixXd s(6, 9);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.uniform();
  const AeLossGradient g = ae_loss_and_gradient(ae, s);
  double worst = 0;
  const double step = 1e-6;
  for (size_t l = 0; l < ae.layers.size(); ++l) {
    auto probe = [&](double& p, double analytic) {
      const double keep = p;
      p = keep + step;
      const double up = ae_loss_and_gradient(ae, s).loss;
      p = keep - step;
      const double down = ae_loss_and_gradient(ae, s).loss;
      p = keep;
      const double fd = (up - down) / (2 * step);
      worst = std::max(worst, std::abs(analytic - fd) / std::max(std::abs(fd), 1e-3));
    };
    for (Eigen::Index i = 0; i < ae.layers[l].weights.size(); ++i)
      probe(ae.layers[l].weights.data()[i], g.gradient[l].weights.data()[i]);
    for (Eigen::Index i = 0; i < ae.layers[l].bias.size(); ++i)
      probe(ae.layers[l].bias.data()[i], g.gradient[l].bias.data()[i]);
  }
  c.expect(worst < 1e-4, "autoencoder gradient check");
  c.notes << " normal-eq rel " << rel << ", gradient rel " << worst;
}

void evaluation(Check& c) {
  c.expect(confusion({1, 1, 0, 0}, {1, 0, 1, 0}, 2).counts == Eigen::Matrix2i::Ones(), "interleaved confusion");
  ConfusionMatrix b;
  b.counts.resize(2, 2);
  b.counts << 50, 50, 0, 100;
  const ClassMetrics m = metrics(b).per_class[0];
  c.expect(m.sensitivity == 0.5 && m.specificity == 1.0 && m.precision == 1.0, "TP/FN/TN/FP hand case");
  c.expect(std::abs(m.f_measure - 2.0 / 3.0) < 1e-15, "F-measure hand case");
  std::vector<int> perfect;
  for (int i = 0; i < 60; ++i) perfect.push_back(i % 6);
  const MetricsReport p = metrics(confusion(perfect, perfect));
  c.expect(p.accuracy == 100 && p.sensitivity == 1 && p.specificity == 1 && p.precision == 1 && p.f_measure == 1,
           "perfect predictions");
  c.expect(metrics(confusion({0, 1, 2, 3, 4}, {0, 1, 2, 3, 4})).per_class[5].degenerate, "absent class flagged");

  Rng rng(55);
  int bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const int classes = 2 + static_cast<int>(rng.index(5));
    std::vector<int> labels;
    for (int k = 0; k < classes; ++k) labels.insert(labels.end(), 10 + static_cast<int>(rng.index(60)), k);
    rng.shuffle(labels);
    const auto folds = stratified_kfold(labels, 10, static_cast<std::uint64_t>(t));
    std::vector<int> seen(labels.size(), 0);
    std::map<int, int> total;
    for (int l : labels) ++total[l];
    bool ok = folds.size() == 10;
    for (const auto& f : folds) {
      std::map<int, int> per;
      for (int i : f) {
        ++seen[i];
        ++per[labels[i]];
      }
      for (auto [k, n] : total) ok = ok && std::abs(per[k] - n / 10.0) < 1.0;
    }
    for (int s : seen) ok = ok && s == 1;
    bad += !ok;
  }
  c.expect(bad == 0, "partition and balance on 1000 label vectors");
  c.notes << " 1000 random label vectors, " << bad << " violations";
}

void dimension_contract(Check& c) {
  const FeatureMatrix raw = testsupport::synth_features(20, 64, 1.0, 6);
  const FeatureMatrix z = standardize_fit_apply(raw);
  AeTraining t;
  t.epochs = 1;
  const std::map<std::string, long> got{
      {"PCA", pca_transform(pca_fit(z), z).cols()},
      {"KPCA", kpca_transform(kpca_fit(z), z).cols()},
      {"SparseAE", ae_encode(sparse_ae_fit(z, kSparseAeBottleneck, t), z).cols()},
      {"StackedAE", ae_encode(stacked_ae_fit(z, t), z).cols()},
      {"ANOVA", select(z, selector_fit(z, SelectorMethod::anova_f, kAnovaSelected)).cols()},
      {"Chi2", select(z, selector_fit(z, SelectorMethod::chi_square, kChiSquareSelected)).cols()},
      {"RF", select(z, selector_fit(z, SelectorMethod::random_forest, kForestSelected, 1)).cols()}};
  const std::map<std::string, long> want{{"PCA", 70},   {"KPCA", 65}, {"SparseAE", 60}, {"StackedAE", 126},
                                         {"ANOVA", 50}, {"Chi2", 40}, {"RF", 35}};
  for (const auto& [k, v] : want) {
    c.expect(got.at(k) == v, k + " -> " + std::to_string(v));
    c.expect(ElmConfig::fadm(static_cast<int>(got.at(k))).hidden_dim == 2 * v, k + " FADM hidden");
    c.notes << ' ' << k << '=' << got.at(k);
  }
  c.expect(ElmConfig::fadm(252).hidden_dim == 504, "All hidden 504");
  c.expect(ElmConfig::dicdm().hidden_dim == 880 && ElmConfig::dicdm().input_dim == 65536, "DICDM 65536-880");
}

struct Replication {
  bool ran = false;
  fs::path report;
};

void end_to_end(Check& c, Replication& rep, const fs::path& work) {
  testsupport::write_text(work / "config.json", R"({"image_size": 64, "dicdm_image_size": 64})");
  const std::string base = "--config " + q(work / "config.json") + " --seed 7 ";
  c.expect(run(base + "--out " + q(work / "synth") + " synth-data --per-class 100 --separability 1.0 --side 64 >" +
               q(work / "synth.log")) == 0,
           "synth-data");
  const int code = run(base + "--jobs 4 --out " + q(work / "run1") + " run-experiment " + q(work / "synth" / "images") +
                       " --rows all --folds 10 >" + q(work / "run1.log"));
  c.expect(code == 0, "run-experiment exit 0");
  const auto j = nlohmann::json::parse(testsupport::read_file(work / "run1" / "report.json"));
  rep.ran = true;
  rep.report = work / "run1" / "report.json";
  std::map<std::string, double> acc;
  double best_dra = -1;
  std::string best_dra_name;
  for (const auto& row : j.at("rows")) {
    std::string name = row.at("name");
    c.expect(row.at("status") == "ok", name + " ok");
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (row.at("status") != "ok") continue;
    acc[name] = row.at("accuracy_mean");
    if (row.at("stage") == "DRAs" && acc[name] > best_dra) {
      best_dra = acc[name];
      best_dra_name = name;
    }
  }
  c.expect(j.at("rows").size() == 16, "16 rows");
  const double all = acc.count("all") ? acc["all"] : -1, dicdm = acc.count("dicdm") ? acc["dicdm"] : 101;
  c.expect(all >= 95.0, "All >= 95%");
  c.expect(all >= dicdm, "All >= DICDM");
  c.expect(best_dra >= all - 2.0, "a DRA row within 2 points of All");
  c.notes << " All " << all << ", DICDM " << dicdm << ", best DRA " << best_dra_name << ' ' << best_dra;
}

void determinism(Check& c, const Replication& rep, const fs::path& work) {
  c.expect(rep.ran, "criterion 7 produced a report");
  if (!rep.ran) return;
  const std::string base = "--config " + q(work / "config.json") + " --seed 7 ";
  c.expect(run(base + "--jobs 2 --out " + q(work / "run2") + " run-experiment " + q(work / "synth" / "images") +
               " --rows all --folds 10 >" + q(work / "run2.log")) == 0,
           "second run exit 0");
  const std::string a = testsupport::read_file(rep.report);
  const std::string b = testsupport::read_file(work / "run2" / "report.json");
  c.expect(!a.empty() && a == b, "report.json byte-identical across --jobs 4 and --jobs 2");
  c.notes << " report.json " << a.size() << " bytes, jobs 4 vs 2 " << (a == b ? "identical" : "differ");
}

}  // namespace

int main() {
  const fs::path work = testsupport::scratch_dir("acceptance");
  Replication rep;
  criterion(1, "feature arithmetic", 1, feature_arithmetic);
  criterion(2, "oracle equivalences", 30, oracle_equivalences);
  criterion(3, "statistical-selector oracles", 60, selector_oracles);
  criterion(4, "ELM exactness", 30, elm_exactness);
  criterion(5, "evaluation correctness", 10, evaluation);
  criterion(6, "dimension contract", 1e9, dimension_contract);
  criterion(7, "end-to-end desk-scale replication", 600, [&](Check& c) { end_to_end(c, rep, work); });
  criterion(8, "determinism across job counts", 1e9, [&](Check& c) { determinism(c, rep, work); });
  return failures ? 1 : 0;
}
