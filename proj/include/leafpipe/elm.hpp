#pragma once

#include "leafpipe/feature_matrix.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace leafpipe {

inline constexpr int kDicdmHidden = 880;
inline constexpr int kFullImageSide = 256;
inline constexpr int kNumClasses = 6;

enum class ElmMode { closed_form, iterative };

std::string to_string(ElmMode m);
ElmMode elm_mode_from_string(const std::string& s);

struct ElmConfig {
  int input_dim = 0;
  int hidden_dim = 0;
  int classes = kNumClasses;
  ElmMode mode = ElmMode::closed_form;
  double ridge = 1e-6;
  // Iterative-mode optimizer (adaptive moments on softmax cross-entropy).
  double learning_rate = 1e-3;
  int batch_size = 16;
  int max_epochs = 100;
  int patience = 10;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;

  /// Feature-analysis configuration: hidden = 2 * input.
  static ElmConfig fadm(int input_dim, std::uint64_t seed = 0);
  /// Direct image configuration: side*side pixel inputs, 880 hidden units.
  static ElmConfig dicdm(int image_side = kFullImageSide, std::uint64_t seed = 0);
};

struct ElmModel {
  int input_dim = 0;
  int hidden_dim = 0;
  ElmMode mode = ElmMode::closed_form;
  std::uint64_t seed = 0;
  Eigen::MatrixXd input_weights;   // hidden x input, uniform [-1, 1]
  Eigen::VectorXd hidden_bias;     // hidden, uniform [-1, 1]
  Eigen::MatrixXd output_weights;  // hidden x classes
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;  // input column names; empty for pixel inputs
  std::optional<Standardization> standardization;  // applied to raw inputs when present

  // Iterative-mode diagnostics.
  std::vector<double> validation_loss;
  int best_epoch = 0;

  int classes() const { return static_cast<int>(output_weights.cols()); }
};

/// Hidden-layer output H = sigmoid(X W^T + bias) (no standardization applied).
Eigen::MatrixXd elm_hidden(const ElmModel& model, const Eigen::MatrixXd& x);

/// Trains output weights. Closed form minimizes |H beta - T|^2 + ridge |beta|^2
/// through a QR factorization of [H; sqrt(ridge) I]. Iterative mode fits
/// softmax cross-entropy with early stopping on a seeded validation split and
/// restores the best epoch.
ElmModel elm_train(const Eigen::MatrixXd& x, const std::vector<int>& labels, const ElmConfig& config);

/// Raw output scores O = H beta.
Eigen::MatrixXd elm_scores(const ElmModel& model, const Eigen::MatrixXd& x);
Eigen::MatrixXd elm_predict_proba(const ElmModel& model, const Eigen::MatrixXd& x);
std::vector<int> elm_predict(const ElmModel& model, const Eigen::MatrixXd& x);

/// Row-wise softmax.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores);

/// Lowest index wins ties.
std::vector<int> argmax_rows(const Eigen::MatrixXd& scores);

inline constexpr int kModelSchemaVersion = 1;

/// Self-describing JSON document; every weight is written with 17
/// significant digits so loading restores the exact binary64 values.
void model_save(const ElmModel& model, const std::filesystem::path& path, const std::string& config_hash = "");
ElmModel model_load(const std::filesystem::path& path);

std::string model_to_string(const ElmModel& model, const std::string& config_hash = "");
ElmModel model_from_string(const std::string& text);

}  // namespace leafpipe
