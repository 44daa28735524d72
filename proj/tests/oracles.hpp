#pragma once

// Brute-force reference implementations used only by tests. They evaluate the
// defining formulas directly and share no code with the library paths they check.

#include "deepdetect/image.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>
#include <vector>

namespace deepdetect::oracle {

inline int refl(int i, int n) {
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

// Circle of 16 pixels at radius 3, listed independently of the library table.
inline std::vector<std::pair<int, int>> fast_circle() {
  return {{0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0}, {3, 1}, {2, 2}, {1, 3},
          {0, 3},  {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}};
}

// Segment test by enumerating every start position and run length.
// Returns 0 when the pixel is not a FAST-9 corner, else the best arc contrast sum.
inline double fast_score(const GrayImage& img, int x, int y, int t) {
  const auto circle = fast_circle();
  const double c = img(y, x);
  double best = 0.0;
  bool corner = false;
  for (int sign : {1, -1}) {
    auto pass = [&](int i) {
      const double v = img(y + circle[i % 16].second, x + circle[i % 16].first);
      return sign > 0 ? v > c + t : v < c - t;
    };
    bool all = true;
    for (int i = 0; i < 16; ++i) all = all && pass(i);
    if (all) {
      double s = 0;
      for (int i = 0; i < 16; ++i) s += std::abs(img(y + circle[i].second, x + circle[i].first) - c);
      corner = true;
      best = std::max(best, s);
      continue;
    }
    for (int start = 0; start < 16; ++start) {
      if (pass(start + 15)) continue;  // runs must be maximal: predecessor fails
      int len = 0;
      double s = 0;
      while (len < 16 && pass(start + len)) {
        const int i = (start + len) % 16;
        s += std::abs(img(y + circle[i].second, x + circle[i].first) - c);
        ++len;
      }
      if (len >= 9) {
        corner = true;
        best = std::max(best, s);
      }
    }
  }
  return corner ? best : 0.0;
}

// Raster-order tie rule: earlier neighbors must be strictly smaller, later ones not larger.
template <typename Map>
std::set<std::pair<int, int>> local_maxima(const Map& response, int radius, double min_response, int margin) {
  std::set<std::pair<int, int>> out;
  const int h = static_cast<int>(response.rows()), w = static_cast<int>(response.cols());
  for (int y = margin; y < h - margin; ++y) {
    for (int x = margin; x < w - margin; ++x) {
      const double v = response(y, x);
      if (!(v > min_response)) continue;
      bool keep = true;
      for (int yy = std::max(0, y - radius); yy <= std::min(h - 1, y + radius); ++yy) {
        for (int xx = std::max(0, x - radius); xx <= std::min(w - 1, x + radius); ++xx) {
          if (xx == x && yy == y) continue;
          const bool before = yy < y || (yy == y && xx < x);
          const double q = response(yy, xx);
          if (before ? q >= v : q > v) keep = false;
        }
      }
      if (keep) out.insert({x, y});
    }
  }
  return out;
}

inline std::set<std::pair<int, int>> fast_corners(const GrayImage& img, int t, int nms_radius) {
  Plane<double> score = Plane<double>::Zero(img.rows(), img.cols());
  for (int y = 3; y < img.rows() - 3; ++y)
    for (int x = 3; x < img.cols() - 3; ++x) score(y, x) = fast_score(img, x, y, t);
  return local_maxima(score, nms_radius, 0.0, 0);
}

// Structure tensor by direct 2-D convolution in double precision.
struct Tensor2 {
  Plane<double> xx, xy, yy;
};

inline Tensor2 structure_tensor(const GrayImage& img) {
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  Plane<double> gx(h, w), gy(h, w);
  const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sx = 0, sy = 0;
      for (int j = -1; j <= 1; ++j) {
        for (int i = -1; i <= 1; ++i) {
          const double v = img(refl(y + j, h), refl(x + i, w));
          sx += kx[j + 1][i + 1] * v;
          sy += kx[i + 1][j + 1] * v;
        }
      }
      gx(y, x) = sx;
      gy(y, x) = sy;
    }
  }
  double norm = 0;
  for (int j = -3; j <= 3; ++j)
    for (int i = -3; i <= 3; ++i) norm += std::exp(-0.5 * (i * i + j * j));
  Tensor2 t{Plane<double>(h, w), Plane<double>(h, w), Plane<double>(h, w)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double a = 0, b = 0, c = 0;
      for (int j = -3; j <= 3; ++j) {
        for (int i = -3; i <= 3; ++i) {
          const double wgt = std::exp(-0.5 * (i * i + j * j)) / norm;
          // Separable reflect: rows and columns reflect independently.
          const int yy = refl(y + j, h), xx = refl(x + i, w);
          a += wgt * gx(yy, xx) * gx(yy, xx);
          b += wgt * gx(yy, xx) * gy(yy, xx);
          c += wgt * gy(yy, xx) * gy(yy, xx);
        }
      }
      t.xx(y, x) = a;
      t.xy(y, x) = b;
      t.yy(y, x) = c;
    }
  }
  return t;
}

inline Plane<double> harris(const GrayImage& img, double k) {
  const Tensor2 t = structure_tensor(img);
  return t.xx * t.yy - t.xy * t.xy - k * (t.xx + t.yy).square();
}

inline Plane<double> min_eigen(const GrayImage& img) {
  const Tensor2 t = structure_tensor(img);
  Plane<double> out(t.xx.rows(), t.xx.cols());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double a = t.xx.data()[i], b = t.xy.data()[i], c = t.yy.data()[i];
    out.data()[i] = std::max(0.0, (a + c) / 2 - std::sqrt((a - c) * (a - c) / 4 + b * b));
  }
  return out;
}

inline std::set<std::pair<int, int>> as_set(const KeypointList& kps) {
  std::set<std::pair<int, int>> s;
  for (const auto& k : kps) s.insert({static_cast<int>(k.x), static_cast<int>(k.y)});
  return s;
}

}  // namespace deepdetect::oracle
