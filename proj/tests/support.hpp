#pragma once

#include "leafpipe/imgcore.hpp"
#include "leafpipe/random.hpp"

#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace testsupport {

using leafpipe::ImageRGB;

// Minimal PNG writer built straight on zlib: one IDAT, filter type 0.
inline std::vector<std::uint8_t> png_encode(const ImageRGB& img) {
  std::vector<std::uint8_t> out{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  auto put32 = [](std::vector<std::uint8_t>& v, std::uint32_t x) {
    for (int s = 24; s >= 0; s -= 8) v.push_back(static_cast<std::uint8_t>(x >> s));
  };
  auto chunk = [&](const char* type, const std::vector<std::uint8_t>& body) {
    put32(out, static_cast<std::uint32_t>(body.size()));
    std::vector<std::uint8_t> crc_input(type, type + 4);
    crc_input.insert(crc_input.end(), body.begin(), body.end());
    out.insert(out.end(), crc_input.begin(), crc_input.end());
    put32(out, static_cast<std::uint32_t>(crc32(0, crc_input.data(), static_cast<uInt>(crc_input.size()))));
  };
  std::vector<std::uint8_t> ihdr;
  put32(ihdr, static_cast<std::uint32_t>(img.width));
  put32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});
  chunk("IHDR", ihdr);

  std::vector<std::uint8_t> raw;
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);
    const auto* row = img.data.data() + static_cast<std::size_t>(y) * img.width * 3;
    raw.insert(raw.end(), row, row + img.width * 3);
  }
  uLongf len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> z(len);
  compress(z.data(), &len, raw.data(), static_cast<uLong>(raw.size()));
  z.resize(len);
  chunk("IDAT", z);
  chunk("IEND", {});
  return out;
}

inline void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline ImageRGB random_image(int w, int h, std::uint64_t seed) {
  leafpipe::Rng rng(seed);
  ImageRGB img(w, h);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.index(256));
  return img;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("leafpipe_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testsupport
