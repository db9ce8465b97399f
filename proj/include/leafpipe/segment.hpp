#pragma once

#include "leafpipe/imgcore.hpp"
#include "leafpipe/preprocess.hpp"

namespace leafpipe {

using BinaryMask = Plane<bool>;

struct SegmentedImage {
  ImageGray gray;        // min-max normalized, then equalized; values in [0, 1]
  BinaryMask mask;       // true = lesion
  double threshold = 0;  // in a* units
  bool fallback = false; // mask replaced by the whole leaf
};

/// Otsu threshold over a 256-bin histogram spanning [min, max] of the plane.
/// Candidate k (1..255) sits at the bin boundary min + k * (max - min) / 256;
/// returns the candidate with the largest between-class variance, smallest k
/// on ties. A constant plane returns its value.
double otsu_threshold(const Plane<double>& values);

/// Number of candidate boundaries strictly below v, i.e. the class-1 test
/// "v > t_k" is exactly "otsu_bin(v) >= k". Exposed for oracle tests.
int otsu_bin(double v, double lo, double width);

/// Masks with coverage below or above these fractions fall back to the full leaf.
inline constexpr double kMinMaskCoverage = 0.005;
inline constexpr double kMaxMaskCoverage = 0.995;

/// Lab conversion, Otsu on a*, mask = a* > T, plus the preprocessed grayscale.
SegmentedImage segment_leaf(const ImageRGB& rgb, const AheParams& ahe = {});

/// Debug overlay: lesion pixels blended 50% towards pure red.
ImageRGB mask_overlay(const ImageRGB& rgb, const BinaryMask& mask);

}  // namespace leafpipe
