#pragma once

#include "leafpipe/features.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

// Reference implementations written from the textbook definitions.
namespace oracle {

// Pair enumeration straight from the definition.
inline Eigen::MatrixXd glcm(const leafpipe::SegmentedImage& s, int dx, int dy, int levels) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(levels, levels);
  auto q = [&](int y, int x) { return std::min(levels - 1, static_cast<int>(std::floor(s.gray(y, x) * levels))); };
  double total = 0;
  for (int y = 0; y < s.gray.rows(); ++y)
    for (int x = 0; x < s.gray.cols(); ++x) {
      const int x2 = x + dx, y2 = y + dy;
      if (x2 < 0 || y2 < 0 || x2 >= s.gray.cols() || y2 >= s.gray.rows()) continue;
      if (!s.mask(y, x) || !s.mask(y2, x2)) continue;
      c(q(y, x), q(y2, x2)) += 1;
      c(q(y2, x2), q(y, x)) += 1;
      total += 2;
    }
  return c / total;
}

inline leafpipe::Plane<double> dft_magnitude(const leafpipe::ImageGray& f) {
  const Eigen::Index h = f.rows(), w = f.cols();
  leafpipe::Plane<double> mag(h, w);
  for (Eigen::Index v = 0; v < h; ++v)
    for (Eigen::Index u = 0; u < w; ++u) {
      std::complex<double> acc = 0;
      for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x) {
          const double ph = -2 * std::numbers::pi * (static_cast<double>(u * x) / w + static_cast<double>(v * y) / h);
          acc += f(y, x) * std::polar(1.0, ph);
        }
      mag(v, u) = std::abs(acc);
    }
  return mag;
}

}  // namespace oracle
