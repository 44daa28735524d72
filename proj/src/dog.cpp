#include "deepdetect/detectors.hpp"

#include "deepdetect/errors.hpp"
#include "deepdetect/imgproc.hpp"

#include <cmath>

namespace deepdetect {

namespace {

constexpr int kOctaves = 3;
constexpr int kScalesPerOctave = 3;
constexpr double kSigma0 = 1.6;
constexpr double kInputBlur = 0.5;

GrayImage halve(const GrayImage& img) {
  const int w = width_of(img) / 2, h = height_of(img) / 2;
  GrayImage out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(y, x) = img(2 * y, 2 * x);
  return out;
}

bool is_extremum(const std::vector<GrayImage>& dog, int s, int x, int y) {
  const float v = dog[s](y, x);
  const bool maximum = v > 0.0f;
  for (int ds = -1; ds <= 1; ++ds) {
    const GrayImage& layer = dog[s + ds];
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (ds == 0 && dy == 0 && dx == 0) continue;
        const float q = layer(y + dy, x + dx);
        if (maximum ? !(v > q) : !(v < q)) return false;
      }
    }
  }
  return true;
}

}  // namespace

KeypointList detect_dog(const GrayImage& img, const DetectorProfile& profile) {
  if (std::min(img.cols(), img.rows()) < 32) throw InvalidArgument("DoG needs min(width, height) >= 32");
  const double k = std::pow(2.0, 1.0 / kScalesPerOctave);
  const int levels = kScalesPerOctave + 3;
  const double edge_limit = (profile.dog_edge_r + 1.0) * (profile.dog_edge_r + 1.0) / profile.dog_edge_r;

  KeypointList out;
  GrayImage base = gaussian_blur(img, std::sqrt(kSigma0 * kSigma0 - kInputBlur * kInputBlur));
  for (int octave = 0; octave < kOctaves; ++octave) {
    if (octave > 0) {
      if (std::min(base.cols(), base.rows()) < 8) break;
    }
    std::vector<GrayImage> gauss{base};
    for (int i = 1; i < levels; ++i) {
      const double prev = kSigma0 * std::pow(k, i - 1);
      const double cur = prev * k;
      gauss.push_back(gaussian_blur(gauss.back(), std::sqrt(cur * cur - prev * prev)));
    }
    std::vector<GrayImage> dog;
    for (int i = 0; i + 1 < levels; ++i) dog.push_back(gauss[i + 1] - gauss[i]);

    const int w = width_of(base), h = height_of(base);
    const double step = std::ldexp(1.0, octave);
    for (int s = 1; s <= kScalesPerOctave; ++s) {
      const GrayImage& d = dog[s];
      for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
          const float v = d(y, x);
          if (!(std::abs(v) > profile.dog_contrast_t)) continue;
          if (!is_extremum(dog, s, x, y)) continue;
          const double dxx = d(y, x + 1) + d(y, x - 1) - 2.0 * v;
          const double dyy = d(y + 1, x) + d(y - 1, x) - 2.0 * v;
          const double dxy = 0.25 * (d(y + 1, x + 1) - d(y + 1, x - 1) - d(y - 1, x + 1) + d(y - 1, x - 1));
          const double det = dxx * dyy - dxy * dxy;
          const double tr = dxx + dyy;
          if (!(det > 0.0) || !(tr * tr / det < edge_limit)) continue;
          const float bx = std::min(static_cast<float>(x * step), static_cast<float>(img.cols() - 1));
          const float by = std::min(static_cast<float>(y * step), static_cast<float>(img.rows() - 1));
          out.push_back({bx, by, std::abs(v), static_cast<float>(kSigma0 * std::pow(k, s) * step)});
        }
      }
    }
    base = halve(gauss[kScalesPerOctave]);
  }
  return out;
}

}  // namespace deepdetect
