#include "leafpipe/features.hpp"

#include "leafpipe/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

namespace leafpipe {

namespace {

constexpr int kHistBins = 256;
constexpr double kAreaEps = 1e-12;

double xlog2x(double p) { return p > 0 ? p * std::log2(p) : 0.0; }

}  // namespace

Eigen::Matrix<double, 14, 1> StatDescriptor14::as_vector() const {
  Eigen::Matrix<double, 14, 1> v;
  v << area, mean, standard_deviation, energy, median, skewness, entropy, maximum, minimum,
      mean_absolute_deviation, kurtosis, range, root_mean_square, uniformity;
  return v;
}

const std::array<std::string, 14>& StatDescriptor14::names() {
  static const std::array<std::string, 14> n{"area", "mean",     "std",   "energy", "median",
                                             "skewness", "entropy", "max", "min",    "mad",
                                             "kurtosis", "range",   "rms", "uniformity"};
  return n;
}

StatDescriptor14 stat14_weighted(std::span<const double> values, std::span<const double> weights,
                                 std::optional<double> area_override) {
  if (values.size() != weights.size()) throw ArgumentError("stat14: values/weights length mismatch");
  std::vector<std::pair<double, double>> vw;
  vw.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    if (weights[i] > 0) vw.emplace_back(values[i], weights[i]);
  if (vw.empty()) throw ArgumentError("stat14: empty input");
  std::sort(vw.begin(), vw.end());

  StatDescriptor14 s;
  double total = 0, sum = 0, sq = 0;
  double area = 0;
  for (auto [v, w] : vw) {
    total += w;
    sum += w * v;
    sq += w * v * v;
    if (std::abs(v) > kAreaEps) area += 1;
  }
  s.area = area_override.value_or(area);
  s.mean = sum / total;
  s.energy = sq;
  s.root_mean_square = std::sqrt(sq / total);
  s.minimum = vw.front().first;
  s.maximum = vw.back().first;
  s.range = s.maximum - s.minimum;

  double m2 = 0, m3 = 0, m4 = 0, mad = 0;
  for (auto [v, w] : vw) {
    const double d = v - s.mean;
    m2 += w * d * d;
    m3 += w * d * d * d;
    m4 += w * d * d * d * d;
    mad += w * std::abs(d);
  }
  m2 /= total;
  m3 /= total;
  m4 /= total;
  s.standard_deviation = std::sqrt(m2);
  s.mean_absolute_deviation = mad / total;
  if (s.standard_deviation > 0 && s.range > 0) {
    s.skewness = m3 / (m2 * s.standard_deviation);
    s.kurtosis = m4 / (m2 * m2) - 3.0;
  }

  // Weighted median: first value whose cumulative weight reaches half; an
  // exact half split averages with the next value.
  const double half = total / 2;
  double cum = 0;
  for (std::size_t i = 0; i < vw.size(); ++i) {
    cum += vw[i].second;
    if (cum >= half) {
      s.median = (cum == half && i + 1 < vw.size()) ? (vw[i].first + vw[i + 1].first) / 2 : vw[i].first;
      break;
    }
  }

  std::array<double, kHistBins> hist{};
  if (s.range > 0) {
    for (auto [v, w] : vw) {
      const int b = std::clamp(static_cast<int>(std::floor((v - s.minimum) / s.range * kHistBins)), 0, kHistBins - 1);
      hist[b] += w;
    }
  } else {
    hist[0] = total;
  }
  for (double h : hist) {
    const double p = h / total;
    s.entropy -= xlog2x(p);
    s.uniformity += p * p;
  }
  s.entropy = std::max(0.0, s.entropy);
  return s;
}

StatDescriptor14 stat14(std::span<const double> values, std::optional<double> area_override) {
  if (values.empty()) throw ArgumentError("stat14: empty input");
  const std::vector<double> ones(values.size(), 1.0);
  return stat14_weighted(values, ones, area_override);
}

std::pair<int, int> orientation_offset(Orientation o, int distance) {
  switch (o) {
    case Orientation::deg0: return {distance, 0};
    case Orientation::deg45: return {distance, -distance};
    case Orientation::deg90: return {0, -distance};
    case Orientation::deg135: return {-distance, -distance};
  }
  return {distance, 0};
}

Plane<int> quantize(const ImageGray& gray, int levels) {
  if (levels < 2) throw ArgumentError("quantize: levels must be >= 2");
  return (gray * levels).floor().cast<int>().max(0).min(levels - 1);
}

namespace {

// Calls f(level_a, level_b) for every masked pair (p, p + offset).
template <typename F>
long for_each_pair(const Plane<int>& q, const BinaryMask& mask, int dx, int dy, F&& f) {
  long pairs = 0;
  const int h = static_cast<int>(q.rows());
  const int w = static_cast<int>(q.cols());
  for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y)
    for (int x = std::max(0, -dx); x < std::min(w, w - dx); ++x) {
      if (!mask(y, x) || !mask(y + dy, x + dx)) continue;
      f(q(y, x), q(y + dy, x + dx));
      ++pairs;
    }
  return pairs;
}

void check_segmented(const SegmentedImage& img) {
  if (img.gray.rows() != img.mask.rows() || img.gray.cols() != img.mask.cols())
    throw ArgumentError("segmented image: gray/mask dimension mismatch");
}

}  // namespace

Glcm glcm_compute(const SegmentedImage& img, Orientation o, int distance, int levels) {
  check_segmented(img);
  if (distance < 1) throw ArgumentError("glcm: distance must be >= 1");
  const Plane<int> q = quantize(img.gray, levels);
  Glcm g;
  g.levels = levels;
  std::tie(g.dx, g.dy) = orientation_offset(o, distance);
  g.p = Eigen::MatrixXd::Zero(levels, levels);
  const long pairs = for_each_pair(q, img.mask, g.dx, g.dy, [&](int a, int b) {
    g.p(a, b) += 1;
    g.p(b, a) += 1;
  });
  if (pairs == 0) throw DegenerateError("glcm: no masked pixel pair");
  g.p /= 2.0 * static_cast<double>(pairs);
  return g;
}

const std::array<std::string, 14>& haralick_names() {
  static const std::array<std::string, 14> n{
      "asm",          "contrast",    "correlation", "sum_of_squares",      "idm",
      "sum_average",  "sum_variance", "sum_entropy", "entropy",            "difference_variance",
      "difference_entropy", "imc1",  "imc2",        "mcc"};
  return n;
}

Eigen::Matrix<double, 14, 1> glcm_features14(const Glcm& g) {
  const Eigen::MatrixXd& p = g.p;
  const int m = static_cast<int>(p.rows());
  const Eigen::VectorXd px = p.rowwise().sum();
  const Eigen::VectorXd py = p.colwise().sum().transpose();
  const Eigen::VectorXd lv = Eigen::VectorXd::LinSpaced(m, 0, m - 1);

  const double mux = px.dot(lv), muy = py.dot(lv);
  const double varx = px.dot((lv.array() - mux).square().matrix());
  const double vary = py.dot((lv.array() - muy).square().matrix());

  Eigen::VectorXd psum = Eigen::VectorXd::Zero(2 * m - 1);
  Eigen::VectorXd pdiff = Eigen::VectorXd::Zero(m);
  double asm_ = 0, contrast = 0, ijp = 0, sos = 0, idm = 0, hxy = 0, hxy1 = 0, hxy2 = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double v = p(i, j);
      const double d = i - j;
      asm_ += v * v;
      contrast += d * d * v;
      ijp += i * j * v;
      sos += (i - mux) * (i - mux) * v;
      idm += v / (1 + d * d);
      psum(i + j) += v;
      pdiff(std::abs(i - j)) += v;
      hxy -= xlog2x(v);
      const double pp = px(i) * py(j);
      if (pp > 0) {
        hxy1 -= v * std::log2(pp);
        hxy2 -= xlog2x(pp);
      }
    }

  const double sdev = std::sqrt(varx * vary);
  const double correlation = sdev > 1e-15 ? (ijp - mux * muy) / sdev : 0.0;

  const Eigen::VectorXd kv = Eigen::VectorXd::LinSpaced(2 * m - 1, 0, 2 * m - 2);
  const double sum_avg = psum.dot(kv);
  const double sum_var = psum.dot((kv.array() - sum_avg).square().matrix());
  double sum_ent = 0, diff_ent = 0, hx = 0, hy = 0;
  for (Eigen::Index k = 0; k < psum.size(); ++k) sum_ent -= xlog2x(psum(k));
  for (int k = 0; k < m; ++k) {
    diff_ent -= xlog2x(pdiff(k));
    hx -= xlog2x(px(k));
    hy -= xlog2x(py(k));
  }
  const double diff_mean = pdiff.dot(lv);
  const double diff_var = pdiff.dot((lv.array() - diff_mean).square().matrix());

  const double hmax = std::max(hx, hy);
  const double imc1 = hmax > 1e-15 ? (hxy - hxy1) / hmax : 0.0;
  const double imc2 = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * std::numbers::ln2 * (hxy2 - hxy))));

  // Maximal correlation coefficient: sqrt of the second largest eigenvalue of
  // Q(i,j) = sum_k p(i,k) p(j,k) / (px(i) py(k)), evaluated through the
  // similar symmetric matrix D^-1/2 P Dy^-1 P^T D^-1/2 on the support.
  double mcc = 0;
  std::vector<int> rows, cols;
  for (int i = 0; i < m; ++i) {
    if (px(i) > 0) rows.push_back(i);
    if (py(i) > 0) cols.push_back(i);
  }
  if (rows.size() >= 2) {
    Eigen::MatrixXd a(rows.size(), cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < cols.size(); ++c)
        a(r, c) = p(rows[r], cols[c]) / std::sqrt(px(rows[r]) * py(cols[c]));
    const Eigen::MatrixXd s = a * a.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
    mcc = std::sqrt(std::clamp(ev(ev.size() - 2), 0.0, 1.0));
  }

  Eigen::Matrix<double, 14, 1> f;
  f << asm_, contrast, correlation, sos, idm, sum_avg, sum_var, sum_ent, std::max(0.0, hxy), diff_var,
      diff_ent, imc1, imc2, mcc;
  return f;
}

Gldm gldm_compute(const SegmentedImage& img, Orientation o, int distance, int levels) {
  check_segmented(img);
  if (distance < 1) throw ArgumentError("gldm: distance must be >= 1");
  const Plane<int> q = quantize(img.gray, levels);
  Gldm d;
  d.levels = levels;
  std::tie(d.dx, d.dy) = orientation_offset(o, distance);
  d.distribution = Eigen::VectorXd::Zero(levels);
  const long pairs = for_each_pair(q, img.mask, d.dx, d.dy, [&](int a, int b) { d.distribution(std::abs(a - b)) += 1; });
  if (pairs == 0) throw DegenerateError("gldm: no masked pixel pair");
  d.distribution /= static_cast<double>(pairs);
  return d;
}

Eigen::Matrix<double, 14, 1> gldm_features14(const Gldm& d) {
  const Eigen::VectorXd lv = Eigen::VectorXd::LinSpaced(d.levels, 0, d.levels - 1);
  const double occupied = static_cast<double>((d.distribution.array() > 0).count());
  return stat14_weighted(std::span<const double>(lv.data(), lv.size()),
                         std::span<const double>(d.distribution.data(), d.distribution.size()), occupied)
      .as_vector();
}

namespace {

using cd = std::complex<double>;

bool is_pow2(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

void fft_inplace(std::vector<cd>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2 * std::numbers::pi / static_cast<double>(len);
    for (std::size_t i = 0; i < n; i += len)
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cd w = std::polar(1.0, ang * static_cast<double>(k));
        const cd u = a[i + k];
        const cd v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
  }
}

void dft_inplace(std::vector<cd>& a) {
  const std::size_t n = a.size();
  std::vector<cd> out(n);
  for (std::size_t u = 0; u < n; ++u) {
    cd acc = 0;
    for (std::size_t x = 0; x < n; ++x)
      acc += a[x] * std::polar(1.0, -2 * std::numbers::pi * static_cast<double>((u * x) % n) / static_cast<double>(n));
    out[u] = acc;
  }
  a.swap(out);
}

void transform_1d(std::vector<cd>& a) {
  if (is_pow2(static_cast<Eigen::Index>(a.size())))
    fft_inplace(a);
  else
    dft_inplace(a);
}

ImageGray masked_gray(const SegmentedImage& img) {
  check_segmented(img);
  return img.mask.select(img.gray, 0.0);
}

}  // namespace

Plane<double> dft2_magnitude(const ImageGray& img) {
  const Eigen::Index h = img.rows(), w = img.cols();
  Plane<cd> f = img.cast<cd>();
  std::vector<cd> line;
  for (Eigen::Index y = 0; y < h; ++y) {
    line.assign(f.row(y).begin(), f.row(y).end());
    transform_1d(line);
    for (Eigen::Index x = 0; x < w; ++x) f(y, x) = line[x];
  }
  for (Eigen::Index x = 0; x < w; ++x) {
    line.resize(h);
    for (Eigen::Index y = 0; y < h; ++y) line[y] = f(y, x);
    transform_1d(line);
    for (Eigen::Index y = 0; y < h; ++y) f(y, x) = line[y];
  }
  return f.abs();
}

Eigen::Matrix<double, 14, 1> fft_features(const SegmentedImage& img) {
  return stat14(dft2_magnitude(masked_gray(img))).as_vector();
}

HaarLevel haar_level(const ImageGray& img) {
  if (img.rows() % 2 || img.cols() % 2) throw ArgumentError("haar: dimensions must be even");
  const Eigen::Index h = img.rows() / 2, w = img.cols() / 2;
  HaarLevel out{ImageGray(h, w), ImageGray(h, w), ImageGray(h, w), ImageGray(h, w)};
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) {
      const double a = img(2 * y, 2 * x), b = img(2 * y, 2 * x + 1);
      const double c = img(2 * y + 1, 2 * x), d = img(2 * y + 1, 2 * x + 1);
      out.ll(y, x) = (a + b + c + d) / 2;
      out.lh(y, x) = ((a + b) - (c + d)) / 2;
      out.hl(y, x) = ((a - b) + (c - d)) / 2;
      out.hh(y, x) = ((a - b) - (c - d)) / 2;
    }
  return out;
}

ImageGray haar_inverse(const HaarLevel& level) {
  const Eigen::Index h = level.ll.rows(), w = level.ll.cols();
  ImageGray out(2 * h, 2 * w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) {
      const double ll = level.ll(y, x), lh = level.lh(y, x), hl = level.hl(y, x), hh = level.hh(y, x);
      out(2 * y, 2 * x) = (ll + lh + hl + hh) / 2;
      out(2 * y, 2 * x + 1) = (ll + lh - hl - hh) / 2;
      out(2 * y + 1, 2 * x) = (ll - lh + hl - hh) / 2;
      out(2 * y + 1, 2 * x + 1) = (ll - lh - hl + hh) / 2;
    }
  return out;
}

Eigen::Matrix<double, 112, 1> dwt_features(const SegmentedImage& img) {
  if (img.gray.rows() % 4 || img.gray.cols() % 4) throw ArgumentError("dwt: dimensions must be divisible by 4");
  const HaarLevel l1 = haar_level(masked_gray(img));
  const HaarLevel l2 = haar_level(l1.ll);
  const ImageGray* bands[8] = {&l1.ll, &l1.lh, &l1.hl, &l1.hh, &l2.ll, &l2.lh, &l2.hl, &l2.hh};
  Eigen::Matrix<double, 112, 1> f;
  for (int b = 0; b < 8; ++b) f.segment<14>(14 * b) = stat14(*bands[b]).as_vector();
  return f;
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    n.reserve(feature_layout::kTotal);
    const auto& stats = StatDescriptor14::names();
    static constexpr const char* kAngles[4] = {"a000", "a045", "a090", "a135"};
    for (const auto& s : stats) n.push_back("tex." + s);
    for (const char* a : kAngles)
      for (const auto& h : haralick_names()) n.push_back(std::string("glcm.") + a + "." + h);
    for (const char* a : kAngles)
      for (const auto& s : stats) n.push_back(std::string("gldm.") + a + "." + s);
    for (const auto& s : stats) n.push_back("fft." + s);
    static constexpr const char* kBands[8] = {"LL1", "LH1", "HL1", "HH1", "LL2", "LH2", "HL2", "HH2"};
    for (const char* b : kBands)
      for (const auto& s : stats) n.push_back(std::string("dwt.") + b + "." + s);
    return n;
  }();
  return names;
}

FeatureVector extract_all(const SegmentedImage& img, const FeatureConfig& cfg) {
  namespace fl = feature_layout;
  check_segmented(img);
  FeatureVector fv;
  fv.values.resize(fl::kTotal);

  std::vector<double> inside;
  inside.reserve(static_cast<std::size_t>(img.mask.count()));
  for (Eigen::Index y = 0; y < img.gray.rows(); ++y)
    for (Eigen::Index x = 0; x < img.gray.cols(); ++x)
      if (img.mask(y, x)) inside.push_back(img.gray(y, x));
  if (inside.empty()) throw DegenerateError("extract_all: empty mask");
  fv.values.segment<14>(fl::kTexture) = stat14(inside, static_cast<double>(inside.size())).as_vector();

  for (int k = 0; k < 4; ++k) {
    const Orientation o = kOrientations[k];
    Glcm g;
    try {
      g = glcm_compute(img, o, cfg.distance, cfg.levels);
    } catch (const DegenerateError&) {
      g.levels = cfg.levels;
      g.p = Eigen::MatrixXd::Constant(cfg.levels, cfg.levels, 1.0 / (cfg.levels * cfg.levels));
      fv.glcm_degenerate = true;
    }
    fv.values.segment<14>(fl::kGlcm + 14 * k) = glcm_features14(g);

    Gldm d;
    try {
      d = gldm_compute(img, o, cfg.distance, cfg.levels);
    } catch (const DegenerateError&) {
      d.levels = cfg.levels;
      d.distribution = Eigen::VectorXd::Constant(cfg.levels, 1.0 / cfg.levels);
      fv.gldm_degenerate = true;
    }
    fv.values.segment<14>(fl::kGldm + 14 * k) = gldm_features14(d);
  }

  fv.values.segment<14>(fl::kFft) = fft_features(img);
  fv.values.segment<112>(fl::kDwt) = dwt_features(img);
  return fv;
}

Eigen::VectorXd masked_pixels(const SegmentedImage& img) {
  const ImageGray m = masked_gray(img);
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

}  // namespace leafpipe
