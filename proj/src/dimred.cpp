#include "leafpipe/dimred.hpp"

#include "leafpipe/errors.hpp"
#include "leafpipe/random.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <numeric>

namespace leafpipe {

namespace {

std::vector<std::string> numbered_names(const char* prefix, int k) {
  std::vector<std::string> names;
  names.reserve(k);
  char buf[32];
  for (int i = 0; i < k; ++i) {
    std::snprintf(buf, sizeof buf, "%s.%03d", prefix, i);
    names.emplace_back(buf);
  }
  return names;
}

FeatureMatrix with_values(const FeatureMatrix& like, Eigen::MatrixXd values, std::vector<std::string> names) {
  FeatureMatrix out;
  out.values = std::move(values);
  out.names = std::move(names);
  out.labels = like.labels;
  out.sample_ids = like.sample_ids;
  return out;
}

// Top-k eigenpairs of a symmetric matrix in non-increasing order.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> top_eigenpairs(const Eigen::MatrixXd& s, int k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  if (es.info() != Eigen::Success) throw SolverError("symmetric eigendecomposition failed");
  const Eigen::Index n = s.rows();
  Eigen::VectorXd values(k);
  Eigen::MatrixXd vectors(n, k);
  for (int i = 0; i < k; ++i) {
    values(i) = es.eigenvalues()(n - 1 - i);
    vectors.col(i) = es.eigenvectors().col(n - 1 - i);
    fix_sign(vectors.col(i));
  }
  return {values, vectors};
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  if (v.size() > 0 && v(best) < 0) v = -v;
}

PcaModel pca_fit(const FeatureMatrix& m, int k) {
  const Eigen::Index n = m.rows(), d = m.cols();
  if (k < 1 || k > std::min<Eigen::Index>(n - 1, d))
    throw ArgumentError("pca: k=" + std::to_string(k) + " outside [1, min(rows-1, cols)]");
  PcaModel model;
  model.mean = m.values.colwise().mean();
  const Eigen::MatrixXd centred = m.values.rowwise() - model.mean;
  const Eigen::MatrixXd cov = (centred.transpose() * centred) / static_cast<double>(n - 1);
  auto [values, vectors] = top_eigenpairs(cov, k);
  model.eigenvalues = values;
  model.components = vectors.transpose();
  return model;
}

FeatureMatrix pca_transform(const PcaModel& model, const FeatureMatrix& m) {
  if (m.cols() != model.mean.size()) throw ArgumentError("pca_transform: column count mismatch");
  Eigen::MatrixXd projected = (m.values.rowwise() - model.mean) * model.components.transpose();
  return with_values(m, std::move(projected), numbered_names("pca", static_cast<int>(model.components.rows())));
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Kernel kernel, double gamma) {
  if (a.cols() != b.cols()) throw ArgumentError("kernel_matrix: column count mismatch");
  Eigen::MatrixXd dot = a * b.transpose();
  if (kernel == Kernel::linear) return dot;
  const Eigen::VectorXd an = a.rowwise().squaredNorm();
  const Eigen::RowVectorXd bn = b.rowwise().squaredNorm().transpose();
  Eigen::MatrixXd sq = (-2.0 * dot).colwise() + an;
  sq.rowwise() += bn;
  return (-gamma * sq.cwiseMax(0.0)).array().exp().matrix();
}

KpcaModel kpca_fit(const FeatureMatrix& m, int k, std::optional<double> gamma, Kernel kernel) {
  const Eigen::Index n = m.rows(), d = m.cols();
  if (k < 1 || k > n - 1) throw ArgumentError("kpca: k=" + std::to_string(k) + " outside [1, rows-1]");
  KpcaModel model;
  model.training_rows = m.values;
  model.kernel = kernel;
  if (gamma) {
    model.gamma = *gamma;
  } else {
    const Eigen::RowVectorXd mean = m.values.colwise().mean();
    const double mean_var = (m.values.rowwise() - mean).array().square().sum() / static_cast<double>(n * d);
    model.gamma = 1.0 / (static_cast<double>(d) * (mean_var > 0 ? mean_var : 1.0));
  }
  const Eigen::MatrixXd kmat = kernel_matrix(m.values, m.values, kernel, model.gamma);
  model.kernel_col_means = kmat.colwise().mean();
  model.kernel_mean = kmat.mean();
  Eigen::MatrixXd centred = kmat;
  centred.rowwise() -= model.kernel_col_means;
  centred.colwise() -= model.kernel_col_means.transpose();
  centred.array() += model.kernel_mean;
  centred = 0.5 * (centred + centred.transpose()).eval();

  auto [values, vectors] = top_eigenpairs(centred, k);
  if (!(values(0) > 1e-10)) throw DegenerateError("kpca: centred kernel has no positive eigenvalue");
  if (!(values(k - 1) > 1e-10))
    throw DegenerateError("kpca: fewer than " + std::to_string(k) + " eigenvalues above 1e-10");
  model.eigenvalues = values;
  model.alphas = vectors.array().rowwise() / values.transpose().array().sqrt();
  return model;
}

FeatureMatrix kpca_transform(const KpcaModel& model, const FeatureMatrix& m) {
  if (m.cols() != model.training_rows.cols()) throw ArgumentError("kpca_transform: column count mismatch");
  Eigen::MatrixXd kx = kernel_matrix(m.values, model.training_rows, model.kernel, model.gamma);
  const Eigen::VectorXd row_means = kx.rowwise().mean();
  kx.rowwise() -= model.kernel_col_means;
  kx.colwise() -= row_means;
  kx.array() += model.kernel_mean;
  return with_values(m, kx * model.alphas, numbered_names("kpca", static_cast<int>(model.alphas.cols())));
}

double kl_divergence(double rho, double p) {
  return rho * std::log(rho / p) + (1 - rho) * std::log((1 - rho) / (1 - p));
}

AutoencoderModel ae_init(std::vector<int> layer_sizes, int bottleneck, double sparsity_target,
                         double sparsity_weight, std::uint64_t seed) {
  if (layer_sizes.size() < 3) throw ArgumentError("autoencoder: need input, hidden and output layers");
  if (bottleneck < 1 || bottleneck >= static_cast<int>(layer_sizes.size()) - 1)
    throw ArgumentError("autoencoder: bottleneck must be a hidden layer");
  if (layer_sizes.front() != layer_sizes.back()) throw ArgumentError("autoencoder: output must mirror input");
  AutoencoderModel model;
  model.layer_sizes = std::move(layer_sizes);
  model.bottleneck = bottleneck;
  model.sparsity_target = sparsity_target;
  model.sparsity_weight = sparsity_weight;
  Rng rng(seed);
  for (std::size_t l = 1; l < model.layer_sizes.size(); ++l) {
    const int in = model.layer_sizes[l - 1], out = model.layer_sizes[l];
    const double limit = std::sqrt(6.0 / (in + out));
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (Eigen::Index j = 0; j < in; ++j)
      for (Eigen::Index i = 0; i < out; ++i) layer.weights(i, j) = rng.uniform(-limit, limit);
    model.layers.push_back(std::move(layer));
  }
  const int d = model.layer_sizes.front();
  model.input_min = Eigen::RowVectorXd::Zero(d);
  model.input_range = Eigen::RowVectorXd::Ones(d);
  return model;
}

namespace {

std::vector<Eigen::MatrixXd> forward(const AutoencoderModel& model, const Eigen::MatrixXd& x01) {
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(model.layers.size() + 1);
  acts.push_back(x01);
  for (const auto& layer : model.layers) {
    Eigen::MatrixXd z = layer.weights * acts.back();
    z.colwise() += layer.bias;
    acts.push_back(z.unaryExpr(&sigmoid));
  }
  return acts;
}

}  // namespace

AeLossGradient ae_loss_and_gradient(const AutoencoderModel& model, const Eigen::MatrixXd& x01) {
  const auto acts = forward(model, x01);
  const double n = static_cast<double>(x01.cols());
  const double count = n * static_cast<double>(x01.rows());
  const Eigen::MatrixXd diff = acts.back() - x01;

  AeLossGradient out;
  out.loss = diff.squaredNorm() / count;

  Eigen::VectorXd sparsity_grad;
  if (model.sparsity_weight > 0) {
    const Eigen::VectorXd p = acts[model.bottleneck].rowwise().mean();
    const double rho = model.sparsity_target;
    double kl = 0;
    sparsity_grad.resize(p.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      const double pj = std::clamp(p(j), 1e-12, 1 - 1e-12);
      kl += kl_divergence(rho, pj);
      sparsity_grad(j) = model.sparsity_weight * (-rho / pj + (1 - rho) / (1 - pj)) / n;
    }
    out.loss += model.sparsity_weight * kl;
  }

  out.gradient.resize(model.layers.size());
  Eigen::MatrixXd grad_act = 2.0 * diff / count;
  for (int l = static_cast<int>(model.layers.size()); l >= 1; --l) {
    if (l == model.bottleneck && sparsity_grad.size() > 0) grad_act.colwise() += sparsity_grad;
    const Eigen::MatrixXd& a = acts[l];
    const Eigen::MatrixXd delta = grad_act.array() * a.array() * (1.0 - a.array());
    out.gradient[l - 1].weights = delta * acts[l - 1].transpose();
    out.gradient[l - 1].bias = delta.rowwise().sum();
    if (l > 1) grad_act = model.layers[l - 1].weights.transpose() * delta;
  }
  return out;
}

void ae_train(AutoencoderModel& model, const Eigen::MatrixXd& x01, const AeTraining& t) {
  if (t.batch_size < 1 || t.epochs < 0) throw ArgumentError("autoencoder: invalid training parameters");
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<DenseLayer> m1, m2;
  for (const auto& layer : model.layers) {
    m1.push_back({Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                  Eigen::VectorXd::Zero(layer.bias.size())});
    m2.push_back(m1.back());
  }
  const Eigen::Index n = x01.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(t.seed, {0x5eed}));
  long step = 0;
  for (int epoch = 1; epoch <= t.epochs; ++epoch) {
    rng.shuffle(order);
    double weighted_loss = 0;
    for (Eigen::Index start = 0; start < n; start += t.batch_size) {
      const Eigen::Index len = std::min<Eigen::Index>(t.batch_size, n - start);
      const std::vector<Eigen::Index> idx(order.begin() + start, order.begin() + start + len);
      const Eigen::MatrixXd batch = x01(Eigen::all, idx);
      const AeLossGradient lg = ae_loss_and_gradient(model, batch);
      if (!std::isfinite(lg.loss)) throw DivergenceError("autoencoder: non-finite loss", epoch);
      weighted_loss += lg.loss * static_cast<double>(len);
      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto update = [&](auto& param, auto& mom1, auto& mom2, const auto& grad) {
          mom1 = beta1 * mom1 + (1 - beta1) * grad;
          mom2 = beta2 * mom2 + (1 - beta2) * grad.cwiseProduct(grad);
          param.array() -= t.learning_rate * (mom1.array() / c1) / ((mom2.array() / c2).sqrt() + eps);
        };
        update(model.layers[l].weights, m1[l].weights, m2[l].weights, lg.gradient[l].weights);
        update(model.layers[l].bias, m1[l].bias, m2[l].bias, lg.gradient[l].bias);
      }
    }
    const double epoch_loss = weighted_loss / static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) throw DivergenceError("autoencoder: non-finite loss", epoch);
    model.loss_history.push_back(epoch_loss);
  }
}

Eigen::MatrixXd ae_rescale(const AutoencoderModel& model, const Eigen::MatrixXd& rows) {
  if (rows.cols() != model.input_min.size()) throw ArgumentError("autoencoder: column count mismatch");
  return ((rows.rowwise() - model.input_min).array().rowwise() / model.input_range.array()).matrix().transpose();
}

namespace {

void fit_rescaling(AutoencoderModel& model, const Eigen::MatrixXd& rows) {
  model.input_min = rows.colwise().minCoeff();
  model.input_range = rows.colwise().maxCoeff() - model.input_min;
  for (Eigen::Index j = 0; j < model.input_range.size(); ++j)
    if (!(model.input_range(j) > 0)) model.input_range(j) = 1.0;
}

}  // namespace

AutoencoderModel sparse_ae_fit(const FeatureMatrix& m, int bottleneck, const AeTraining& t) {
  const int d = static_cast<int>(m.cols());
  if (bottleneck < 1 || bottleneck >= d) throw ArgumentError("sparse autoencoder: bottleneck must be < input width");
  AutoencoderModel model = ae_init({d, bottleneck, d}, 1, t.sparsity_target, t.sparsity_weight, t.seed);
  fit_rescaling(model, m.values);
  ae_train(model, ae_rescale(model, m.values), t);
  return model;
}

AutoencoderModel stacked_ae_fit(const FeatureMatrix& m, const AeTraining& t, int intermediate, int bottleneck) {
  const int d = static_cast<int>(m.cols());
  if (bottleneck < 1 || bottleneck >= d) throw ArgumentError("stacked autoencoder: bottleneck must be < input width");
  AutoencoderModel model = ae_init({d, intermediate, bottleneck, intermediate, d}, 2, 0.0, 0.0, t.seed);
  fit_rescaling(model, m.values);
  ae_train(model, ae_rescale(model, m.values), t);
  return model;
}

Eigen::MatrixXd ae_reconstruct(const AutoencoderModel& model, const Eigen::MatrixXd& x01) {
  return forward(model, x01).back();
}

FeatureMatrix ae_encode(const AutoencoderModel& model, const FeatureMatrix& m) {
  Eigen::MatrixXd a = ae_rescale(model, m.values);
  for (int l = 0; l < model.bottleneck; ++l) {
    Eigen::MatrixXd z = model.layers[l].weights * a;
    z.colwise() += model.layers[l].bias;
    a = z.unaryExpr(&sigmoid);
  }
  const char* prefix = model.sparsity_weight > 0 ? "sae" : "ae";
  return with_values(m, a.transpose(), numbered_names(prefix, model.encoded_dim()));
}

}  // namespace leafpipe
