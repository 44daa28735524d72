#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace deepdetect {

// Dense single-channel raster, rows = height, cols = width, row-major storage.
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using GrayImage = Plane<float>;     // intensities in [0, 255]
using BinaryMask = Plane<uint8_t>;  // values in {0, 1}
using EdgeMap = BinaryMask;
using ProbMap = Plane<float>;  // values in [0, 1]

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;  // R,G,B triplets, row-major

  RgbImage() = default;
  RgbImage(int w, int h, uint8_t fill = 0)
      : width(w), height(h), data(static_cast<size_t>(w) * h * 3, fill) {}

  uint8_t& at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  uint8_t at(int x, int y, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  bool operator==(const RgbImage&) const = default;
};

inline int width_of(const auto& plane) { return static_cast<int>(plane.cols()); }
inline int height_of(const auto& plane) { return static_cast<int>(plane.rows()); }

struct Keypoint {
  float x = 0.0f;  // column
  float y = 0.0f;  // row
  float score = 0.0f;
  float scale = 8.0f;
};

using KeypointList = std::vector<Keypoint>;

// Reflect-101 index into [0, n): -1 -> 1, n -> n-2.
inline int reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace deepdetect
