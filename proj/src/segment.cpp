#include "leafpipe/segment.hpp"

#include "leafpipe/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace leafpipe {

namespace {
constexpr int kOtsuBins = 256;
}

int otsu_bin(double v, double lo, double width) {
  auto boundary = [&](int k) { return lo + k * width; };
  int b = static_cast<int>(std::floor((v - lo) / width));
  b = std::clamp(b, 0, kOtsuBins - 1);
  // Settle against the exact boundary expressions used by the classifier.
  while (b > 0 && !(v > boundary(b))) --b;
  while (b < kOtsuBins - 1 && v > boundary(b + 1)) ++b;
  return b;
}

double otsu_threshold(const Plane<double>& values) {
  if (values.size() == 0) throw ArgumentError("otsu_threshold: empty plane");
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  if (!(hi > lo)) return lo;
  const double width = (hi - lo) / kOtsuBins;

  std::array<double, kOtsuBins> count{}, sum{};
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = values.data()[i];
    const int b = otsu_bin(v, lo, width);
    count[b] += 1;
    sum[b] += v;
  }
  const double n = static_cast<double>(values.size());
  const double total = std::accumulate(sum.begin(), sum.end(), 0.0);

  int best_k = 1;
  double best = -1;
  double c0 = 0, s0 = 0;
  for (int k = 1; k < kOtsuBins; ++k) {
    c0 += count[k - 1];
    s0 += sum[k - 1];
    const double c1 = n - c0;
    if (c0 == 0 || c1 == 0) continue;
    const double m0 = s0 / c0;
    const double m1 = (total - s0) / c1;
    const double between = (c0 / n) * (c1 / n) * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_k = k;
    }
  }
  return lo + best_k * width;
}

SegmentedImage segment_leaf(const ImageRGB& rgb, const AheParams& ahe) {
  const ImageLab lab = rgb_to_lab(rgb);
  SegmentedImage seg;
  seg.threshold = otsu_threshold(lab.a);
  seg.mask = lab.a > seg.threshold;
  const double coverage = static_cast<double>(seg.mask.count()) / static_cast<double>(seg.mask.size());
  if (coverage < kMinMaskCoverage || coverage > kMaxMaskCoverage) {
    seg.mask.setConstant(true);
    seg.fallback = true;
  }
  seg.gray = adaptive_hist_eq(minmax_normalize(to_gray(rgb)), ahe);
  return seg;
}

ImageRGB mask_overlay(const ImageRGB& rgb, const BinaryMask& mask) {
  ImageRGB out = rgb;
  for (int y = 0; y < rgb.height; ++y)
    for (int x = 0; x < rgb.width; ++x) {
      if (!mask(y, x)) continue;
      static constexpr int kRed[3] = {255, 0, 0};
      for (int c = 0; c < 3; ++c)
        out.at(x, y, c) = static_cast<std::uint8_t>((rgb.at(x, y, c) + kRed[c] + 1) / 2);
    }
  return out;
}

}  // namespace leafpipe
