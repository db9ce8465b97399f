#include "leafpipe/preprocess.hpp"

#include "leafpipe/errors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace leafpipe {

namespace {

struct TileMap {
  bool identity = false;
  std::vector<double> level;  // mapped value per bin
};

int bin_of(double v, int bins) {
  const int b = static_cast<int>(std::floor(v * bins));
  return std::clamp(b, 0, bins - 1);
}

TileMap build_map(const ImageGray& img, int y0, int y1, int x0, int x1, const AheParams& p) {
  std::vector<double> hist(p.bins, 0.0);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) hist[bin_of(img(y, x), p.bins)] += 1.0;
  const double n = static_cast<double>((y1 - y0) * (x1 - x0));
  TileMap map;
  if (std::count_if(hist.begin(), hist.end(), [](double h) { return h > 0; }) <= 1) {
    map.identity = true;
    return map;
  }
  if (p.clip_limit > 0) {
    const double ceiling = std::max(1.0, p.clip_limit * n / p.bins);
    double excess = 0;
    for (double& h : hist)
      if (h > ceiling) {
        excess += h - ceiling;
        h = ceiling;
      }
    const double share = excess / p.bins;
    for (double& h : hist) h += share;
  }
  map.level.resize(p.bins);
  double cdf = 0;
  for (int b = 0; b < p.bins; ++b) {
    cdf += hist[b];
    map.level[b] = std::clamp((cdf - hist[b] / 2) / n, 0.0, 1.0);
  }
  return map;
}

double apply_map(const TileMap& m, double v, int bins) {
  return m.identity ? v : m.level[bin_of(v, bins)];
}

}  // namespace

ImageGray adaptive_hist_eq(const ImageGray& img, const AheParams& p) {
  if (p.tiles_x < 1 || p.tiles_y < 1 || p.bins < 2 || p.clip_limit < 0)
    throw ArgumentError("adaptive_hist_eq: invalid parameters");
  const int h = static_cast<int>(img.rows());
  const int w = static_cast<int>(img.cols());
  if (h < p.tiles_y || w < p.tiles_x)
    throw ArgumentError("adaptive_hist_eq: image smaller than one pixel per tile");

  auto edge = [](int t, int tiles, int len) { return static_cast<int>(static_cast<long>(t) * len / tiles); };
  std::vector<TileMap> maps(static_cast<std::size_t>(p.tiles_x) * p.tiles_y);
  std::vector<double> cy(p.tiles_y), cx(p.tiles_x);
  for (int ty = 0; ty < p.tiles_y; ++ty) {
    const int y0 = edge(ty, p.tiles_y, h), y1 = edge(ty + 1, p.tiles_y, h);
    cy[ty] = (y0 + y1 - 1) / 2.0;
    for (int tx = 0; tx < p.tiles_x; ++tx) {
      const int x0 = edge(tx, p.tiles_x, w), x1 = edge(tx + 1, p.tiles_x, w);
      cx[tx] = (x0 + x1 - 1) / 2.0;
      maps[static_cast<std::size_t>(ty) * p.tiles_x + tx] = build_map(img, y0, y1, x0, x1, p);
    }
  }

  // Neighbouring tile pair and blend weight along one axis.
  auto locate = [](const std::vector<double>& centres, double pos) {
    const int n = static_cast<int>(centres.size());
    if (pos <= centres.front()) return std::tuple{0, 0, 0.0};
    if (pos >= centres.back()) return std::tuple{n - 1, n - 1, 0.0};
    int i = 0;
    while (centres[i + 1] < pos) ++i;
    return std::tuple{i, i + 1, (pos - centres[i]) / (centres[i + 1] - centres[i])};
  };

  ImageGray out(h, w);
  for (int y = 0; y < h; ++y) {
    auto [ta, tb, wy] = locate(cy, y);
    for (int x = 0; x < w; ++x) {
      auto [la, lb, wx] = locate(cx, x);
      const double v = img(y, x);
      auto m = [&](int ty, int tx) { return apply_map(maps[static_cast<std::size_t>(ty) * p.tiles_x + tx], v, p.bins); };
      const double top = (1 - wx) * m(ta, la) + wx * m(ta, lb);
      const double bot = (1 - wx) * m(tb, la) + wx * m(tb, lb);
      out(y, x) = std::clamp((1 - wy) * top + wy * bot, 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace leafpipe
