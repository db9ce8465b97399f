#include "leafpipe/dataset.hpp"

#include "leafpipe/errors.hpp"
#include "leafpipe/parallel.hpp"
#include "leafpipe/random.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <numeric>

namespace leafpipe {

namespace fs = std::filesystem;

std::vector<int> DatasetManifest::counts() const {
  std::vector<int> c;
  for (const auto& s : samples) c.push_back(static_cast<int>(s.size()));
  return c;
}

int DatasetManifest::total() const {
  const auto c = counts();
  return std::accumulate(c.begin(), c.end(), 0);
}

namespace {

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace

DatasetManifest ingest(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IngestError("dataset root '" + root.string() + "' is not a directory");
  DatasetManifest m;
  m.root = root;
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw IngestError("dataset root '" + root.string() + "' has no class directories");
  for (const auto& dir : dirs) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      if (is_image_file(entry.path()))
        files.push_back(entry.path());
      else
        std::clog << "warning: skipping non-image file " << entry.path().string() << '\n';
    }
    const std::string name = dir.filename().string();
    if (files.empty()) throw IngestError("class '" + name + "' has no images");
    std::sort(files.begin(), files.end());
    m.classes.push_back(name);
    m.samples.push_back(std::move(files));
  }
  return m;
}

nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json j;
  j["root"] = m.root.string();
  j["classes"] = m.classes;
  j["counts"] = m.counts();
  j["total"] = m.total();
  nlohmann::json samples = nlohmann::json::object();
  for (std::size_t c = 0; c < m.classes.size(); ++c) {
    std::vector<std::string> rel;
    for (const auto& p : m.samples[c]) rel.push_back(fs::relative(p, m.root).generic_string());
    samples[m.classes[c]] = rel;
  }
  j["samples"] = samples;
  return j;
}

const std::vector<std::string>& synth_class_names() {
  static const std::vector<std::string> names{"bacterial_leaf_blight", "brown_spot", "healthy",
                                              "leaf_blast", "leaf_scald", "sheath_blight"};
  return names;
}

namespace {

enum class Motif { stripe, spots, none, blotch, scald, band };

constexpr Motif kMotifs[] = {Motif::stripe, Motif::spots, Motif::none, Motif::blotch, Motif::scald, Motif::band};

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3 - 2 * t);
}

// Lattice value noise in [0, 1] over the unit square.
class ValueNoise {
 public:
  ValueNoise(int cells, Rng& rng) : n_(cells), lattice_((cells + 1) * (cells + 1)) {
    for (double& v : lattice_) v = rng.uniform();
  }
  double operator()(double u, double v) const {
    const double x = u * n_, y = v * n_;
    const int x0 = std::clamp(static_cast<int>(x), 0, n_ - 1);
    const int y0 = std::clamp(static_cast<int>(y), 0, n_ - 1);
    const double fx = smoothstep(x - x0), fy = smoothstep(y - y0);
    auto at = [&](int i, int k) { return lattice_[static_cast<std::size_t>(k * (n_ + 1) + i)]; };
    const double top = at(x0, y0) * (1 - fx) + at(x0 + 1, y0) * fx;
    const double bottom = at(x0, y0 + 1) * (1 - fx) + at(x0 + 1, y0 + 1) * fx;
    return top * (1 - fy) + bottom * fy;
  }

 private:
  int n_;
  std::vector<double> lattice_;
};

struct Rgb {
  double r, g, b;
};

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

struct Spot {
  double cx, cy, rx, ry;
};

// Per-pixel lesion opacity and colour for one motif instance.
class Lesion {
 public:
  Lesion(Motif motif, Rng& rng) : motif_(motif), edge_noise_(6, rng) {
    switch (motif) {
      case Motif::spots: {
        const int n = 7 + static_cast<int>(rng.index(6));
        for (int i = 0; i < n; ++i) {
          const double r = rng.uniform(0.035, 0.06);
          spots_.push_back({rng.uniform(0.08, 0.92), rng.uniform(0.08, 0.92), r * rng.uniform(1.0, 1.5), r});
        }
        break;
      }
      case Motif::blotch: {
        const int n = 1 + static_cast<int>(rng.index(2));
        for (int i = 0; i < n; ++i)
          spots_.push_back({rng.uniform(0.3, 0.7), rng.uniform(0.25, 0.75), rng.uniform(0.2, 0.28),
                            rng.uniform(0.08, 0.12)});
        break;
      }
      case Motif::stripe:
        centre_ = rng.uniform(0.3, 0.7);
        width_ = rng.uniform(0.07, 0.1);
        phase_ = rng.uniform(0, 2 * std::numbers::pi);
        break;
      case Motif::scald:
        side_ = static_cast<int>(rng.index(2));
        width_ = rng.uniform(0.3, 0.45);
        phase_ = rng.uniform(0, 2 * std::numbers::pi);
        break;
      case Motif::band:
        centre_ = rng.uniform(0.3, 0.7);
        width_ = rng.uniform(0.09, 0.13);
        break;
      case Motif::none:
        break;
    }
  }

  // Opacity in [0, 1] and colour at (u, v).
  double alpha(double u, double v, Rgb& colour) const {
    const double wobble = edge_noise_(u, v) - 0.5;
    switch (motif_) {
      case Motif::spots: {
        double best = 0;
        for (const Spot& s : spots_) {
          const double d = std::hypot((u - s.cx) / s.rx, (v - s.cy) / s.ry);
          best = std::max(best, smoothstep((1.15 - d) / 0.3));
        }
        colour = {105, 58, 28};
        return best;
      }
      case Motif::blotch: {
        double best = 0, radial = 1;
        for (const Spot& s : spots_) {
          const double d = std::hypot((u - s.cx) / s.rx, (v - s.cy) / s.ry) + 0.25 * wobble;
          const double a = smoothstep((1.1 - d) / 0.25);
          if (a > best) {
            best = a;
            radial = d;
          }
        }
        // Pale centre, brown rim.
        colour = mix(Rgb{185, 170, 140}, Rgb{125, 70, 40}, smoothstep((radial - 0.4) / 0.5));
        return best;
      }
      case Motif::stripe: {
        const double edge = centre_ + 0.04 * std::sin(9 * u + phase_) + 0.05 * wobble;
        colour = {205, 185, 95};
        return smoothstep((width_ - std::abs(v - edge)) / 0.03);
      }
      case Motif::scald: {
        const double d = (side_ == 0 ? u : 1 - u) + 0.08 * wobble;
        const double a = smoothstep((width_ - d) / 0.08);
        // Zonate bands alternating between reddish brown and tan.
        const double zone = 0.5 + 0.5 * std::sin(d * 55 + phase_);
        colour = mix(Rgb{160, 75, 45}, Rgb{190, 140, 90}, zone);
        return a;
      }
      case Motif::band: {
        const double d = std::abs(u - centre_ - 0.06 * wobble);
        colour = {135, 120, 85};
        return smoothstep((width_ - d) / 0.035);
      }
      case Motif::none:
        break;
    }
    colour = {0, 0, 0};
    return 0;
  }

 private:
  Motif motif_;
  ValueNoise edge_noise_;
  std::vector<Spot> spots_;
  double centre_ = 0.5, width_ = 0.1, phase_ = 0;
  int side_ = 0;
};

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

SynthSample synth_image(int class_index, double separability, std::uint64_t seed, int side) {
  if (class_index < 0 || class_index >= 6) throw ArgumentError("synth: class index must be in 0..5");
  if (side < 8) throw ArgumentError("synth: side must be >= 8");
  if (!(separability >= 0 && separability <= 1)) throw ArgumentError("synth: separability must be in [0, 1]");
  Rng rng(seed);

  // Motif draws come first so every class consumes the same base stream.
  Rng motif_rng(derive_seed(seed, {1}));
  const Lesion lesion(kMotifs[class_index], motif_rng);

  const Rgb base{rng.uniform(55, 80), rng.uniform(125, 160), rng.uniform(35, 60)};
  const ValueNoise coarse(4, rng), medium(8, rng), fine(16, rng);
  const double vein_spacing = rng.uniform(0.07, 0.1);
  const double vein_tilt = rng.uniform(-0.08, 0.08);
  const double vein_phase = rng.uniform(0, 1);

  SynthSample out{ImageRGB(side, side), BinaryMask::Constant(side, side, false)};
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const double u = (x + 0.5) / side, v = (y + 0.5) / side;
      const double n = 0.5 * coarse(u, v) + 0.3 * medium(u, v) + 0.2 * fine(u, v);
      const double shade = 0.8 + 0.4 * n;
      const double vp = std::fmod((v + vein_tilt * u) / vein_spacing + vein_phase + 10, 1.0);
      const double vein = 0.12 * std::exp(-std::pow((vp - 0.5) / 0.12, 2));
      Rgb c{base.r * shade * (1 + vein), base.g * shade * (1 + vein), base.b * shade * (1 + vein)};

      Rgb lc{0, 0, 0};
      const double a = lesion.alpha(u, v, lc);
      if (a > 0) {
        const double t = separability * a;
        c = mix(c, Rgb{lc.r * (0.85 + 0.3 * n), lc.g * (0.85 + 0.3 * n), lc.b * (0.85 + 0.3 * n)}, t);
      }
      out.lesion(y, x) = a > 0.5;
      out.image.at(x, y, 0) = to_byte(c.r + rng.uniform(-5, 5));
      out.image.at(x, y, 1) = to_byte(c.g + rng.uniform(-5, 5));
      out.image.at(x, y, 2) = to_byte(c.b + rng.uniform(-5, 5));
    }
  }
  return out;
}

DatasetManifest synth_generate(const SynthSpec& spec, const fs::path& out, int jobs) {
  if (spec.classes != 6) throw ArgumentError("synth: exactly 6 classes are supported");
  if (spec.per_class < 10) throw ArgumentError("synth: per_class must be >= 10");
  const auto& names = synth_class_names();
  for (const auto& name : names) {
    fs::create_directories(out / "images" / name);
    fs::create_directories(out / "masks" / name);
  }
  const std::size_t n = static_cast<std::size_t>(spec.classes) * spec.per_class;
  parallel_for(n, jobs, [&](std::size_t i) {
    const int c = static_cast<int>(i / spec.per_class);
    const int k = static_cast<int>(i % spec.per_class);
    const SynthSample s = synth_image(c, spec.separability,
                                      derive_seed(spec.seed, {static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(k)}),
                                      spec.side);
    char file[96];
    std::snprintf(file, sizeof file, "%s_%04d.png", names[c].c_str(), k);
    write_png(s.image, out / "images" / names[c] / file);
    write_mask_png(s.lesion, out / "masks" / names[c] / file);
  });
  return ingest(out / "images");
}

}  // namespace leafpipe
