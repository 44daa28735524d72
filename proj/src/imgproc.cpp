#include "deepdetect/imgproc.hpp"

#include "deepdetect/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace deepdetect {

GrayImage rgb_to_gray(const RgbImage& img) {
  GrayImage out(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double v = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
      out(y, x) = static_cast<float>(std::clamp(v, 0.0, 255.0));
    }
  }
  return out;
}

RgbImage gray_to_rgb(const GrayImage& img) {
  RgbImage out(width_of(img), height_of(img));
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const auto v = static_cast<uint8_t>(std::clamp(std::lround(img(y, x)), 0L, 255L));
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = v;
    }
  }
  return out;
}

std::vector<float> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  std::vector<float> out(k.size());
  std::transform(k.begin(), k.end(), out.begin(), [sum](double v) { return static_cast<float>(v / sum); });
  return out;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int w = width_of(img);
  const int h = height_of(img);

  GrayImage tmp(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * img(y, reflect101(x + i, w));
      tmp(y, x) = acc;
    }
  }
  GrayImage out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp(reflect101(y + i, h), x);
      out(y, x) = acc;
    }
  }
  return out;
}

Gradients sobel_gradients(const GrayImage& img) {
  const int w = width_of(img);
  const int h = height_of(img);
  if (w < 3 || h < 3) throw InvalidArgument("sobel requires an image of at least 3x3");
  Gradients g{GrayImage(h, w), GrayImage(h, w)};
  for (int y = 0; y < h; ++y) {
    const int ym = reflect101(y - 1, h), yp = reflect101(y + 1, h);
    for (int x = 0; x < w; ++x) {
      const int xm = reflect101(x - 1, w), xp = reflect101(x + 1, w);
      g.gx(y, x) = (img(ym, xp) - img(ym, xm)) + 2.0f * (img(y, xp) - img(y, xm)) + (img(yp, xp) - img(yp, xm));
      g.gy(y, x) = (img(yp, xm) - img(ym, xm)) + 2.0f * (img(yp, x) - img(ym, x)) + (img(yp, xp) - img(ym, xp));
    }
  }
  return g;
}

namespace {

struct Tap {
  int i0, i1;
  float f;
};

Tap source_tap(int dst, int dst_n, int src_n) {
  const double s = (dst + 0.5) * static_cast<double>(src_n) / dst_n - 0.5;
  const double c = std::clamp(s, 0.0, static_cast<double>(src_n - 1));
  const int i0 = static_cast<int>(std::floor(c));
  const int i1 = std::min(i0 + 1, src_n - 1);
  return {i0, i1, static_cast<float>(c - i0)};
}

}  // namespace

GrayImage resize_bilinear(const GrayImage& img, int width, int height) {
  if (width < 1 || height < 1) throw InvalidArgument("resize target must be at least 1x1");
  GrayImage out(height, width);
  for (int y = 0; y < height; ++y) {
    const Tap ty = source_tap(y, height, height_of(img));
    for (int x = 0; x < width; ++x) {
      const Tap tx = source_tap(x, width, width_of(img));
      const float top = img(ty.i0, tx.i0) * (1 - tx.f) + img(ty.i0, tx.i1) * tx.f;
      const float bot = img(ty.i1, tx.i0) * (1 - tx.f) + img(ty.i1, tx.i1) * tx.f;
      out(y, x) = top * (1 - ty.f) + bot * ty.f;
    }
  }
  return out;
}

RgbImage resize_bilinear(const RgbImage& img, int width, int height) {
  if (width < 1 || height < 1) throw InvalidArgument("resize target must be at least 1x1");
  RgbImage out(width, height);
  for (int y = 0; y < height; ++y) {
    const Tap ty = source_tap(y, height, img.height);
    for (int x = 0; x < width; ++x) {
      const Tap tx = source_tap(x, width, img.width);
      for (int c = 0; c < 3; ++c) {
        const float top = img.at(tx.i0, ty.i0, c) * (1 - tx.f) + img.at(tx.i1, ty.i0, c) * tx.f;
        const float bot = img.at(tx.i0, ty.i1, c) * (1 - tx.f) + img.at(tx.i1, ty.i1, c) * tx.f;
        out.at(x, y, c) = static_cast<uint8_t>(std::clamp(std::lround(top * (1 - ty.f) + bot * ty.f), 0L, 255L));
      }
    }
  }
  return out;
}

BinaryMask resize_nearest(const BinaryMask& mask, int width, int height) {
  if (width < 1 || height < 1) throw InvalidArgument("resize target must be at least 1x1");
  BinaryMask out(height, width);
  const int sw = width_of(mask), sh = height_of(mask);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(static_cast<int>((y + 0.5) * sh / height), sh - 1);
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(static_cast<int>((x + 0.5) * sw / width), sw - 1);
      out(y, x) = mask(sy, sx);
    }
  }
  return out;
}

float sample_bilinear(const GrayImage& img, double x, double y) {
  const int w = width_of(img), h = height_of(img);
  const double fx = std::floor(x), fy = std::floor(y);
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const double ax = x - fx, ay = y - fy;
  auto at = [&](int xx, int yy) { return static_cast<double>(img(reflect101(yy, h), reflect101(xx, w))); };
  const double top = at(x0, y0) * (1 - ax) + at(x0 + 1, y0) * ax;
  const double bot = at(x0, y0 + 1) * (1 - ax) + at(x0 + 1, y0 + 1) * ax;
  return static_cast<float>(top * (1 - ay) + bot * ay);
}

RgbImage degrade_photometric(const RgbImage& img, double alpha, double beta) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("degrade alpha must lie in (0, 1]");
  if (!(beta >= -128.0 && beta <= 0.0)) throw InvalidArgument("degrade beta must lie in [-128, 0]");
  std::array<uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v) {
    const long r = std::lround(alpha * (v - 128.0) + 128.0 + beta);
    lut[v] = static_cast<uint8_t>(std::clamp(r, 0L, 255L));
  }
  RgbImage out = img;
  for (auto& v : out.data) v = lut[v];
  return out;
}

std::pair<double, double> luma_statistics(const GrayImage& img) {
  const double n = static_cast<double>(img.size());
  const double mean = img.cast<double>().sum() / n;
  const double var = (img.cast<double>() - mean).square().sum() / n;
  return {mean, std::sqrt(var)};
}

}  // namespace deepdetect
