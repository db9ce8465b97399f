#pragma once

#include "leafpipe/imgcore.hpp"

namespace leafpipe {

struct AheParams {
  int tiles_x = 8;
  int tiles_y = 8;
  int bins = 256;
  double clip_limit = 0.0;  // multiple of the mean bin height; 0 disables clipping
};

/// (I - min) / (max - min); a constant input maps to all zeros.
template <typename Derived>
Plane<typename Derived::Scalar> minmax_normalize(const Eigen::ArrayBase<Derived>& img) {
  using Scalar = typename Derived::Scalar;
  Plane<Scalar> out(img.rows(), img.cols());
  if (img.size() == 0) return out;
  const Scalar lo = img.minCoeff();
  const Scalar hi = img.maxCoeff();
  if (!(hi > lo)) {
    out.setZero();
    return out;
  }
  out = (img - lo) / (hi - lo);
  return out;
}

/// Tile-wise histogram equalization over [0, 1] with bilinear blending of the
/// per-tile mappings between tile centres. A tile's mapping sends bin b to the
/// midpoint of its cumulative mass, (cdf(b) - h(b)/2) / N; tiles whose pixels
/// all share one bin map to the identity.
ImageGray adaptive_hist_eq(const ImageGray& img, const AheParams& p = {});

}  // namespace leafpipe
