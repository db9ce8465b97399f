#pragma once

#include "leafpipe/segment.hpp"

#include <Eigen/Core>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace leafpipe {

/// The 14 first-order statistics. Entropy (bits) and uniformity come from a
/// 256-bin histogram spanning the observed value range.
struct StatDescriptor14 {
  double area = 0;
  double mean = 0;
  double standard_deviation = 0;
  double energy = 0;
  double median = 0;
  double skewness = 0;
  double entropy = 0;
  double maximum = 0;
  double minimum = 0;
  double mean_absolute_deviation = 0;
  double kurtosis = 0;
  double range = 0;
  double root_mean_square = 0;
  double uniformity = 0;

  Eigen::Matrix<double, 14, 1> as_vector() const;
  static const std::array<std::string, 14>& names();
};

/// Statistics of a sample. `area` defaults to the number of entries with
/// |v| > 1e-12. Skewness and excess kurtosis are 0 when the spread is 0.
StatDescriptor14 stat14(std::span<const double> values, std::optional<double> area_override = {});

/// Statistics of a discrete random variable: value i carries frequency
/// weight weights[i] (energy = sum w v^2, mean = sum w v / sum w, ...).
/// Zero-weight entries are ignored.
StatDescriptor14 stat14_weighted(std::span<const double> values, std::span<const double> weights,
                                 std::optional<double> area_override = {});

template <typename Derived>
StatDescriptor14 stat14(const Eigen::DenseBase<Derived>& values, std::optional<double> area_override = {}) {
  const Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic> flat = values.derived().template cast<double>();
  return stat14(std::span<const double>(flat.data(), static_cast<std::size_t>(flat.size())), area_override);
}

enum class Orientation { deg0, deg45, deg90, deg135 };
inline constexpr std::array<Orientation, 4> kOrientations{Orientation::deg0, Orientation::deg45,
                                                          Orientation::deg90, Orientation::deg135};

/// Pixel displacement (dx, dy) for an orientation with y pointing down:
/// 0 -> (d, 0), 45 -> (d, -d), 90 -> (0, -d), 135 -> (-d, -d).
std::pair<int, int> orientation_offset(Orientation o, int distance);

struct FeatureConfig {
  int levels = 32;
  int distance = 1;
};

/// Quantizes [0, 1] intensities into `levels` bins: min(levels-1, floor(v * levels)).
Plane<int> quantize(const ImageGray& gray, int levels);

struct Glcm {
  int levels = 0;
  int dx = 0;
  int dy = 0;
  Eigen::MatrixXd p;  // levels x levels, sums to 1
};

/// Co-occurrence of quantized levels over pixel pairs (p, p + offset) with both
/// endpoints inside the mask, accumulated symmetrically and normalized.
/// Throws DegenerateError when no pair qualifies.
Glcm glcm_compute(const SegmentedImage& img, Orientation o, int distance = 1, int levels = 32);

/// The 14 Haralick features in the order of haralick_names().
Eigen::Matrix<double, 14, 1> glcm_features14(const Glcm& g);
const std::array<std::string, 14>& haralick_names();

struct Gldm {
  int levels = 0;
  int dx = 0;
  int dy = 0;
  Eigen::VectorXd distribution;  // P(d), d = |i - j| in 0..levels-1
};

/// Distribution of absolute quantized differences over masked pairs.
/// Throws DegenerateError when no pair qualifies.
Gldm gldm_compute(const SegmentedImage& img, Orientation o, int distance = 1, int levels = 32);

/// stat14 of the difference variable; area is the number of occupied levels.
Eigen::Matrix<double, 14, 1> gldm_features14(const Gldm& d);

/// |F(u, v)| of the 2-D DFT, same dimensions as the input. Power-of-two axes
/// use radix-2 FFT, other lengths a direct DFT.
Plane<double> dft2_magnitude(const ImageGray& img);

/// stat14 over the magnitude spectrum of the masked (zero-filled) image.
Eigen::Matrix<double, 14, 1> fft_features(const SegmentedImage& img);

/// One level of the separable orthonormal Haar transform. For the 2x2 block
/// [[a, b], [c, d]]: LL = (a+b+c+d)/2, LH = ((a+b)-(c+d))/2,
/// HL = ((a-b)+(c-d))/2, HH = ((a-b)-(c-d))/2.
struct HaarLevel {
  ImageGray ll, lh, hl, hh;
};
HaarLevel haar_level(const ImageGray& img);
ImageGray haar_inverse(const HaarLevel& level);

/// stat14 of the bands LL1, LH1, HL1, HH1, LL2, LH2, HL2, HH2 (112 values) of
/// the masked image. Dimensions must be divisible by 4.
Eigen::Matrix<double, 112, 1> dwt_features(const SegmentedImage& img);

/// Index layout of the 252-dimensional vector.
namespace feature_layout {
inline constexpr int kTexture = 0, kTextureCount = 14;
inline constexpr int kGlcm = 14, kGlcmCount = 56;
inline constexpr int kGldm = 70, kGldmCount = 56;
inline constexpr int kFft = 126, kFftCount = 14;
inline constexpr int kDwt = 140, kDwtCount = 112;
inline constexpr int kTotal = 252;
inline constexpr int kSpatial = 0, kSpatialCount = 126;
inline constexpr int kFrequency = 126, kFrequencyCount = 126;
}  // namespace feature_layout

/// Canonical names, e.g. tex.mean, glcm.a090.contrast, dwt.LH2.entropy.
const std::vector<std::string>& feature_names();

struct FeatureVector {
  Eigen::VectorXd values;     // 252 entries
  bool glcm_degenerate = false;  // some orientation had no masked pair
  bool gldm_degenerate = false;
};

FeatureVector extract_all(const SegmentedImage& img, const FeatureConfig& cfg = {});

/// Masked image flattened row-major (outside-mask pixels are 0): the direct
/// pixel representation.
Eigen::VectorXd masked_pixels(const SegmentedImage& img);

}  // namespace leafpipe
