#include "leafpipe/imgcore.hpp"

#include "leafpipe/errors.hpp"

#include <png.h>
// jpeglib.h needs FILE and size_t declared first.
#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>

namespace leafpipe {

namespace {

bool is_png(const std::vector<std::uint8_t>& bytes) {
  static constexpr std::array<std::uint8_t, 8> sig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= sig.size() && std::equal(sig.begin(), sig.end(), bytes.begin());
}

bool is_jpeg(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff;
}

ImageRGB decode_png(const std::vector<std::uint8_t>& bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw DecodeError(std::string("png: ") + image.message);
  image.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError("png: " + msg);
  }
  ImageRGB out(static_cast<int>(image.width), static_cast<int>(image.height));
  const std::size_t n = static_cast<std::size_t>(out.width) * out.height;
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) out.data[i * 3 + c] = rgba[i * 4 + c];
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Corrupt-data warnings (level -1) are fatal; trace messages are dropped.
void jpeg_emit_message(j_common_ptr cinfo, int level) {
  if (level < 0) jpeg_error_exit(cinfo);
}

ImageRGB decode_jpeg(const std::vector<std::uint8_t>& bytes) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.emit_message = jpeg_emit_message;
  // Only POD state lives across the setjmp boundary; the output buffer is
  // allocated after it so no destructor is skipped by longjmp.
  std::uint8_t* volatile raw = nullptr;
  if (setjmp(err.jump)) {
    std::free(raw);
    jpeg_destroy_decompress(&cinfo);
    throw DecodeError(std::string("jpeg: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const int w = static_cast<int>(cinfo.output_width);
  const int h = static_cast<int>(cinfo.output_height);
  raw = static_cast<std::uint8_t*>(std::malloc(static_cast<std::size_t>(w) * h * 3));
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = raw + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  ImageRGB out(w, h);
  std::memcpy(out.data.data(), raw, out.data.size());
  std::free(raw);
  return out;
}

std::uint8_t clamp_round(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

}  // namespace

ImageRGB decode_image_bytes(const std::vector<std::uint8_t>& bytes) {
  if (is_png(bytes)) return decode_png(bytes);
  if (is_jpeg(bytes)) return decode_jpeg(bytes);
  throw DecodeError("unrecognized image format (expected PNG or JPEG signature)");
}

ImageRGB decode_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  try {
    return decode_image_bytes(bytes);
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

void write_png(const ImageRGB& img, const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, img.data.data(), 0, nullptr))
    throw IoError("png write " + path.string() + ": " + image.message);
}

void write_mask_png(const Plane<bool>& mask, const std::filesystem::path& path) {
  std::vector<std::uint8_t> gray(static_cast<std::size_t>(mask.size()));
  for (Eigen::Index y = 0; y < mask.rows(); ++y)
    for (Eigen::Index x = 0; x < mask.cols(); ++x)
      gray[static_cast<std::size_t>(y * mask.cols() + x)] = mask(y, x) ? 255 : 0;
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(mask.cols());
  image.height = static_cast<png_uint_32>(mask.rows());
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, gray.data(), 0, nullptr))
    throw IoError("png write " + path.string() + ": " + image.message);
}

ImageRGB resize_bilinear(const ImageRGB& img, int w, int h) {
  if (w < 1 || h < 1) throw ArgumentError("resize_bilinear: target dimensions must be >= 1");
  if (img.width < 1 || img.height < 1) throw ArgumentError("resize_bilinear: empty source image");
  if (w == img.width && h == img.height) return img;
  ImageRGB out(w, h);
  const double sx = static_cast<double>(img.width) / w;
  const double sy = static_cast<double>(img.height) / h;
  for (int y = 0; y < h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double ty = fy - y0;
    for (int x = 0; x < w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double tx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = (1 - tx) * img.at(x0, y0, c) + tx * img.at(x1, y0, c);
        const double bot = (1 - tx) * img.at(x0, y1, c) + tx * img.at(x1, y1, c);
        out.at(x, y, c) = clamp_round((1 - ty) * top + ty * bot);
      }
    }
  }
  return out;
}

ImageGray to_gray(const ImageRGB& img) {
  ImageGray g(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      g(y, x) = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
  return g;
}

namespace {

// IEC 61966-2-1 sRGB primaries to XYZ (D65).
constexpr double kM[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                             {0.2126729, 0.7151522, 0.0721750},
                             {0.0193339, 0.1191920, 0.9503041}};

// Reference white as the image of linear (1,1,1); keeps neutral axis exact.
constexpr double kWhite[3] = {kM[0][0] + kM[0][1] + kM[0][2], kM[1][0] + kM[1][1] + kM[1][2],
                              kM[2][0] + kM[2][1] + kM[2][2]};

double srgb_expand(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3 * delta * delta) + 4.0 / 29.0;
}

struct LabTable {
  std::array<double, 256> linear;
  LabTable() {
    for (int i = 0; i < 256; ++i) linear[i] = srgb_expand(i / 255.0);
  }
};

}  // namespace

Eigen::Vector3d srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  static const LabTable table;
  const double lin[3] = {table.linear[r], table.linear[g], table.linear[b]};
  double f[3];
  for (int i = 0; i < 3; ++i) {
    const double xyz = kM[i][0] * lin[0] + kM[i][1] * lin[1] + kM[i][2] * lin[2];
    f[i] = lab_f(xyz / kWhite[i]);
  }
  return {116.0 * f[1] - 16.0, 500.0 * (f[0] - f[1]), 200.0 * (f[1] - f[2])};
}

ImageLab rgb_to_lab(const ImageRGB& img) {
  ImageLab lab{Plane<double>(img.height, img.width), Plane<double>(img.height, img.width),
               Plane<double>(img.height, img.width)};
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const Eigen::Vector3d v = srgb_to_lab(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
      lab.L(y, x) = v[0];
      lab.a(y, x) = v[1];
      lab.b(y, x) = v[2];
    }
  return lab;
}

}  // namespace leafpipe
