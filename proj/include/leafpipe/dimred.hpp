#pragma once

#include "leafpipe/feature_matrix.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

namespace leafpipe {

inline constexpr int kPcaComponents = 70;
inline constexpr int kKpcaComponents = 65;
inline constexpr int kSparseAeBottleneck = 60;
inline constexpr int kStackedAeBottleneck = 126;
inline constexpr int kStackedAeIntermediate = 189;

struct PcaModel {
  Eigen::RowVectorXd mean;
  Eigen::MatrixXd components;  // k x d, orthonormal rows
  Eigen::VectorXd eigenvalues; // k, non-increasing
};

/// Flips v so that its largest-magnitude entry (first one on ties) is positive.
void fix_sign(Eigen::Ref<Eigen::VectorXd> v);

/// Top-k eigenpairs of the sample covariance. Requires 1 <= k <= min(rows-1, cols).
PcaModel pca_fit(const FeatureMatrix& m, int k = kPcaComponents);
FeatureMatrix pca_transform(const PcaModel& model, const FeatureMatrix& m);

enum class Kernel { rbf, linear };

/// K(a_i, b_j); RBF is exp(-gamma * |a_i - b_j|^2), linear is a_i . b_j.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Kernel kernel, double gamma);

struct KpcaModel {
  Eigen::MatrixXd training_rows;
  Kernel kernel = Kernel::rbf;
  double gamma = 0;
  Eigen::MatrixXd alphas;        // n x k, eigenvectors scaled by 1/sqrt(lambda)
  Eigen::VectorXd eigenvalues;   // k, of the centred kernel
  Eigen::RowVectorXd kernel_col_means;
  double kernel_mean = 0;
};

/// Kernel PCA with double-centred kernel. gamma defaults to
/// 1 / (d * mean per-feature variance). Throws DegenerateError when fewer
/// than k eigenvalues exceed 1e-10.
KpcaModel kpca_fit(const FeatureMatrix& m, int k = kKpcaComponents, std::optional<double> gamma = {},
                   Kernel kernel = Kernel::rbf);
FeatureMatrix kpca_transform(const KpcaModel& model, const FeatureMatrix& m);

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;
};

struct AeTraining {
  int epochs = 100;
  double learning_rate = 1e-3;
  int batch_size = 16;
  double sparsity_target = 0.05;  // rho
  double sparsity_weight = 1e-3;  // gamma; 0 disables the penalty
  std::uint64_t seed = 0;
};

/// Sigmoid autoencoder. Inputs are min-max rescaled per column using
/// training statistics; encoding is the activation of layer `bottleneck`.
struct AutoencoderModel {
  std::vector<int> layer_sizes;  // e.g. {252, 60, 252}
  std::vector<DenseLayer> layers;
  int bottleneck = 1;            // index into layer_sizes
  double sparsity_target = 0;
  double sparsity_weight = 0;
  Eigen::RowVectorXd input_min;
  Eigen::RowVectorXd input_range;
  std::vector<double> loss_history;  // mean training loss per epoch

  int encoded_dim() const { return layer_sizes[bottleneck]; }
};

/// Seeded Xavier-uniform initialization without training.
AutoencoderModel ae_init(std::vector<int> layer_sizes, int bottleneck, double sparsity_target,
                         double sparsity_weight, std::uint64_t seed);

/// KL(rho || p) for Bernoulli means.
double kl_divergence(double rho, double p);

/// Loss = mean over all entries of (x - x')^2 + gamma * sum_j KL(rho || p_j),
/// p_j the mean activation of bottleneck unit j over the columns of x01.
/// x01 holds one already-rescaled sample per column.
struct AeLossGradient {
  double loss = 0;
  std::vector<DenseLayer> gradient;
};
AeLossGradient ae_loss_and_gradient(const AutoencoderModel& model, const Eigen::MatrixXd& x01);

/// Mini-batch Adam training from an initialized model; records loss_history.
/// Throws DivergenceError on a non-finite epoch loss.
void ae_train(AutoencoderModel& model, const Eigen::MatrixXd& x01, const AeTraining& t);

/// d - bottleneck - d with the KL sparsity penalty.
AutoencoderModel sparse_ae_fit(const FeatureMatrix& m, int bottleneck = kSparseAeBottleneck,
                               const AeTraining& t = {});

/// d - intermediate - bottleneck - intermediate - d, plain MSE.
AutoencoderModel stacked_ae_fit(const FeatureMatrix& m, const AeTraining& t = {},
                                int intermediate = kStackedAeIntermediate, int bottleneck = kStackedAeBottleneck);

/// Per-column [0, 1] rescaling with the model's training statistics,
/// returned with samples as columns.
Eigen::MatrixXd ae_rescale(const AutoencoderModel& model, const Eigen::MatrixXd& rows);

/// Full reconstruction of rescaled inputs (samples as columns).
Eigen::MatrixXd ae_reconstruct(const AutoencoderModel& model, const Eigen::MatrixXd& x01);

FeatureMatrix ae_encode(const AutoencoderModel& model, const FeatureMatrix& m);

}  // namespace leafpipe
