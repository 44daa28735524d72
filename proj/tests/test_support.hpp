#pragma once

#include "deepdetect/image.hpp"
#include "deepdetect/random.hpp"

#include <filesystem>
#include <string>

namespace deepdetect::testing {

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("deepdetect_" + tag + "_" + std::to_string(reinterpret_cast<uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline GrayImage random_gray(int w, int h, uint64_t seed) {
  Rng rng(seed);
  GrayImage img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = static_cast<float>(rng.below(256));
  return img;
}

inline RgbImage random_rgb(int w, int h, uint64_t seed) {
  Rng rng(seed);
  RgbImage img(w, h);
  for (auto& v : img.data) v = static_cast<uint8_t>(rng.below(256));
  return img;
}

inline GrayImage constant_gray(int w, int h, float v) { return GrayImage::Constant(h, w, v); }

// Bright quadrant x >= cx, y >= cy on a dark background.
inline GrayImage corner_image(int w, int h, int cx, int cy, float dark = 0.0f, float bright = 255.0f) {
  GrayImage img = GrayImage::Constant(h, w, dark);
  img.block(cy, cx, h - cy, w - cx).setConstant(bright);
  return img;
}

// Axis-aligned white square [x0, x1) x [y0, y1) on black.
inline GrayImage square_image(int w, int h, int x0, int y0, int x1, int y1) {
  GrayImage img = GrayImage::Zero(h, w);
  img.block(y0, x0, y1 - y0, x1 - x0).setConstant(255.0f);
  return img;
}

// Columns > c bright, columns <= c dark.
inline GrayImage vertical_step(int w, int h, int c, float lo = 0.0f, float hi = 255.0f) {
  GrayImage img = GrayImage::Constant(h, w, lo);
  img.rightCols(w - c - 1).setConstant(hi);
  return img;
}

// Smooth blobs and ramps so every detector has structure to respond to.
inline GrayImage textured_gray(int w, int h, uint64_t seed) {
  Rng rng(seed);
  GrayImage img = GrayImage::Constant(h, w, 40.0f + static_cast<float>(rng.uniform(0, 60)));
  const int shapes = 6 + static_cast<int>(rng.below(6));
  for (int s = 0; s < shapes; ++s) {
    const int x0 = static_cast<int>(rng.below(w - 8)), y0 = static_cast<int>(rng.below(h - 8));
    const int bw = 4 + static_cast<int>(rng.below(std::max(1, w / 3)));
    const int bh = 4 + static_cast<int>(rng.below(std::max(1, h / 3)));
    const float v = static_cast<float>(rng.uniform(0, 255));
    img.block(y0, x0, std::min(bh, h - y0), std::min(bw, w - x0)).setConstant(v);
  }
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] += static_cast<float>(rng.uniform(-3, 3));
  return img.max(0.0f).min(255.0f);
}

inline RgbImage to_rgb(const GrayImage& g) {
  RgbImage out(width_of(g), height_of(g));
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = static_cast<uint8_t>(std::lround(g(y, x)));
  return out;
}

}  // namespace deepdetect::testing
