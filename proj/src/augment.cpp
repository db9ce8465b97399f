#include "leafpipe/augment.hpp"

#include "leafpipe/errors.hpp"
#include "leafpipe/parallel.hpp"
#include "leafpipe/random.hpp"

#include <cmath>
#include <numbers>

namespace leafpipe {

namespace {

// Bilinear sample treating everything outside the raster as black.
void sample_black(const ImageRGB& img, double fx, double fy, std::uint8_t* out) {
  const double x0f = std::floor(fx);
  const double y0f = std::floor(fy);
  const int x0 = static_cast<int>(x0f);
  const int y0 = static_cast<int>(y0f);
  const double tx = fx - x0f;
  const double ty = fy - y0f;
  auto px = [&](int x, int y, int c) -> double {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return 0.0;
    return img.at(x, y, c);
  };
  for (int c = 0; c < 3; ++c) {
    const double v = (1 - ty) * ((1 - tx) * px(x0, y0, c) + tx * px(x0 + 1, y0, c)) +
                     ty * ((1 - tx) * px(x0, y0 + 1, c) + tx * px(x0 + 1, y0 + 1, c));
    out[c] = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
  }
}

template <typename Map>
ImageRGB warp(const ImageRGB& img, Map&& map) {
  ImageRGB out(img.width, img.height);
  const double cx = (img.width - 1) / 2.0;
  const double cy = (img.height - 1) / 2.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      auto [sx, sy] = map(x - cx, y - cy);
      sample_black(img, sx + cx, sy + cy, &out.data[(static_cast<std::size_t>(y) * img.width + x) * 3]);
    }
  return out;
}

}  // namespace

ImageRGB flip_horizontal(const ImageRGB& img) {
  ImageRGB out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
  return out;
}

ImageRGB rotate(const ImageRGB& img, double theta_degrees) {
  double c, s;
  const double turns = theta_degrees / 90.0;
  if (turns == std::round(turns)) {
    static constexpr double kCos[4] = {1, 0, -1, 0};
    static constexpr double kSin[4] = {0, 1, 0, -1};
    const long q = ((static_cast<long>(std::round(turns)) % 4) + 4) % 4;
    c = kCos[q];
    s = kSin[q];
  } else {
    const double t = theta_degrees * std::numbers::pi / 180.0;
    c = std::cos(t);
    s = std::sin(t);
  }
  return warp(img, [&](double dx, double dy) { return std::pair{c * dx + s * dy, -s * dx + c * dy}; });
}

ImageRGB scale(const ImageRGB& img, double s) {
  if (!(s > 0)) throw ArgumentError("scale: factor must be > 0");
  if (s == 1.0) return img;
  return warp(img, [&](double dx, double dy) { return std::pair{dx / s, dy / s}; });
}

std::vector<ImageRGB> augment_class(const std::vector<ImageRGB>& images, const AugmentSpec& spec,
                                    std::uint64_t class_index, int jobs) {
  if (images.empty()) throw ArgumentError("augment_class: empty class");
  for (double f : spec.scale_factors)
    if (!(f > 0)) throw ArgumentError("augment_class: scale factors must be > 0");
  const std::size_t target = static_cast<std::size_t>(std::max(spec.target_per_class, 0));
  if (images.size() >= target) return images;

  enum class Op { flip, rotate, scale };
  std::vector<Op> ops;
  if (spec.enable_flip) ops.push_back(Op::flip);
  if (!spec.rotation_angles.empty()) ops.push_back(Op::rotate);
  if (!spec.scale_factors.empty()) ops.push_back(Op::scale);
  if (ops.empty()) throw ArgumentError("augment_class: no augmentation operation enabled");

  std::vector<ImageRGB> out(target);
  std::copy(images.begin(), images.end(), out.begin());
  const std::size_t first = images.size();
  parallel_for(target - first, jobs, [&](std::size_t k) {
    const std::size_t slot = first + k;
    Rng rng(derive_seed(spec.seed, {class_index, slot}));
    const ImageRGB& src = images[rng.index(images.size())];
    switch (ops[rng.index(ops.size())]) {
      case Op::flip:
        out[slot] = flip_horizontal(src);
        break;
      case Op::rotate:
        out[slot] = rotate(src, spec.rotation_angles[rng.index(spec.rotation_angles.size())]);
        break;
      case Op::scale:
        out[slot] = scale(src, spec.scale_factors[rng.index(spec.scale_factors.size())]);
        break;
    }
  });
  return out;
}

}  // namespace leafpipe
