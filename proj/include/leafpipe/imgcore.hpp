#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace leafpipe {

/// Row-major 2-D plane indexed (y, x); rows() is the height, cols() the width.
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Real-valued grayscale image. Values are in [0, 255] straight from
/// to_gray and in [0, 1] after min-max normalization.
using ImageGray = Plane<double>;

/// 8-bit sRGB raster, row-major interleaved R,G,B.
struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  ImageRGB() = default;
  ImageRGB(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  bool operator==(const ImageRGB&) const = default;
};

struct ImageLab {
  Plane<double> L;  // L* in [0, 100]
  Plane<double> a;  // green (-) to red (+)
  Plane<double> b;  // blue (-) to yellow (+)
};

/// Decodes a PNG or JPEG file into 8-bit RGB. Alpha is dropped, grayscale
/// and palette images are expanded.
ImageRGB decode_image(const std::filesystem::path& path);

/// Decodes from an in-memory byte stream (format sniffed from the signature).
ImageRGB decode_image_bytes(const std::vector<std::uint8_t>& bytes);

/// Writes an 8-bit RGB PNG.
void write_png(const ImageRGB& img, const std::filesystem::path& path);

/// Writes a grayscale PNG from a boolean mask (true = 255).
void write_mask_png(const Plane<bool>& mask, const std::filesystem::path& path);

/// Bilinear resize with half-pixel-centred sampling and edge clamping.
/// Source coordinate of output pixel x is (x + 0.5) * src_w / w - 0.5;
/// results are rounded half away from zero and clamped to [0, 255].
ImageRGB resize_bilinear(const ImageRGB& img, int w, int h);

/// BT.601 luma, unrounded.
ImageGray to_gray(const ImageRGB& img);

/// sRGB (D65) -> CIELAB.
ImageLab rgb_to_lab(const ImageRGB& img);

/// Single-pixel conversion used by rgb_to_lab; returns (L*, a*, b*).
Eigen::Vector3d srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);

}  // namespace leafpipe
