#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "leafpipe/errors.hpp"
#include "leafpipe/preprocess.hpp"
#include "leafpipe/random.hpp"

#include <cmath>

using namespace leafpipe;

namespace {

ImageGray random_gray(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  ImageGray g(h, w);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.uniform();
  return g;
}

}  // namespace

TEST_CASE("minmax_normalize") {
  ImageGray ramp(16, 16);
  for (int i = 0; i < 256; ++i) ramp.data()[i] = i;
  const ImageGray n = minmax_normalize(ramp);
  CHECK(n.minCoeff() == 0.0);
  CHECK(n.maxCoeff() == 1.0);
  CHECK(n.data()[128] == doctest::Approx(128.0 / 255.0).epsilon(1e-15));
  CHECK(std::abs(n.data()[128] - 0.501961) < 1e-6);

  const ImageGray flat = ImageGray::Constant(4, 5, 17.0);
  CHECK((minmax_normalize(flat) == 0.0).all());

  const ImageGray r = random_gray(9, 7, 1) * 40 - 3;
  const ImageGray once = minmax_normalize(r);
  CHECK((minmax_normalize(once) - once).abs().maxCoeff() < 1e-15);
  for (Eigen::Index i = 0; i < r.size(); ++i)
    for (Eigen::Index k = 0; k < r.size(); ++k)
      if (r.data()[i] <= r.data()[k]) CHECK(once.data()[i] <= once.data()[k]);
}

TEST_CASE("adaptive_hist_eq: constant image stays constant") {
  for (double c : {0.0, 0.3, 1.0}) {
    const ImageGray flat = ImageGray::Constant(32, 32, c);
    const ImageGray out = adaptive_hist_eq(flat);
    CHECK((out - c).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("adaptive_hist_eq: ramp with one tile equals global equalization") {
  const int w = 256, h = 64;
  ImageGray ramp(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) ramp(y, x) = static_cast<double>(x) / (w - 1);
  AheParams p;
  p.tiles_x = p.tiles_y = 1;
  const ImageGray out = adaptive_hist_eq(ramp, p);

  // Global oracle: 256-bin histogram, each bin mapped to the midpoint of its
  // cumulative mass.
  std::vector<double> hist(256, 0), cdf(256, 0);
  auto bin = [](double v) { return std::min(255, static_cast<int>(v * 256)); };
  for (Eigen::Index i = 0; i < ramp.size(); ++i) hist[bin(ramp.data()[i])] += 1;
  double acc = 0;
  for (int b = 0; b < 256; ++b) {
    acc += hist[b];
    cdf[b] = (acc - hist[b] / 2) / static_cast<double>(ramp.size());
  }
  for (Eigen::Index i = 0; i < ramp.size(); ++i) CHECK(std::abs(out.data()[i] - cdf[bin(ramp.data()[i])]) < 1e-12);

  std::vector<double> out_hist(64, 0);
  for (Eigen::Index i = 0; i < out.size(); ++i) out_hist[std::min(63, static_cast<int>(out.data()[i] * 64))] += 1;
  const double expected = static_cast<double>(out.size()) / 64;
  for (double c : out_hist) CHECK(std::abs(c - expected) <= 0.02 * expected);
}

TEST_CASE("adaptive_hist_eq: range, monotone single-tile mapping, errors") {
  const ImageGray g = random_gray(40, 48, 2);
  for (double clip : {0.0, 2.0}) {
    AheParams p;
    p.clip_limit = clip;
    const ImageGray out = adaptive_hist_eq(g, p);
    CHECK(out.minCoeff() >= 0.0);
    CHECK(out.maxCoeff() <= 1.0);
  }
  AheParams one;
  one.tiles_x = one.tiles_y = 1;
  const ImageGray out = adaptive_hist_eq(g, one);
  for (Eigen::Index i = 0; i < g.size(); i += 7)
    for (Eigen::Index k = 0; k < g.size(); k += 5)
      if (g.data()[i] <= g.data()[k]) CHECK(out.data()[i] <= out.data()[k]);

  CHECK_THROWS_AS(adaptive_hist_eq(random_gray(4, 4, 3)), ArgumentError);
  AheParams bad;
  bad.bins = 1;
  CHECK_THROWS_AS(adaptive_hist_eq(g, bad), ArgumentError);
  bad = {};
  bad.clip_limit = -1;
  CHECK_THROWS_AS(adaptive_hist_eq(g, bad), ArgumentError);
  bad = {};
  bad.tiles_x = 0;
  CHECK_THROWS_AS(adaptive_hist_eq(g, bad), ArgumentError);
}
