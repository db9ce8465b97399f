#pragma once

#include "leafpipe/imgcore.hpp"

#include <cstdint>
#include <vector>

namespace leafpipe {

struct AugmentSpec {
  int target_per_class = 1000;
  std::vector<double> rotation_angles{90, 180, 270, 15, -15, 30, -30};
  std::vector<double> scale_factors{0.9, 1.1, 1.25};
  bool enable_flip = true;
  std::uint64_t seed = 0;
};

/// out(x, y) = in(W - 1 - x, y).
ImageRGB flip_horizontal(const ImageRGB& img);

/// Rotation about the image centre c = ((W-1)/2, (H-1)/2). Output pixel p
/// samples the input at R(theta) (p - c) + c with
/// R = [[cos, sin], [-sin, cos]]; bilinear, black outside the source.
/// Multiples of 90 degrees use exact trigonometric values.
ImageRGB rotate(const ImageRGB& img, double theta_degrees);

/// Zoom by s about the centre: output p samples (p - c) / s + c. s > 1 crops,
/// s < 1 pads with black.
ImageRGB scale(const ImageRGB& img, double s);

/// Returns exactly spec.target_per_class images (or the originals untouched
/// when there are already that many): originals first, then variants. The
/// draw for output slot i comes from derive_seed(seed, {class_index, i}), so
/// the result is independent of evaluation order.
std::vector<ImageRGB> augment_class(const std::vector<ImageRGB>& images, const AugmentSpec& spec,
                                    std::uint64_t class_index = 0, int jobs = 1);

}  // namespace leafpipe
