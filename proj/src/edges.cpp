#include "deepdetect/detectors.hpp"

#include "deepdetect/errors.hpp"
#include "deepdetect/imgproc.hpp"

#include <cmath>
#include <vector>

namespace deepdetect {

EdgeMap edges_canny(const GrayImage& img, const DetectorProfile& profile) {
  const int w = width_of(img), h = height_of(img);
  if (w < 5 || h < 5) throw InvalidArgument("canny needs an image of at least 5x5");
  const Gradients g = sobel_gradients(gaussian_blur(img, 1.4));
  const GrayImage mag = (g.gx.square() + g.gy.square()).sqrt();

  // Quantized direction -> neighbor offset along the gradient.
  constexpr int kStep[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
  Plane<float> thin = Plane<float>::Zero(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float m = mag(y, x);
      if (!(m > 0.0f)) continue;
      double angle = std::atan2(g.gy(y, x), g.gx(y, x)) * 180.0 / M_PI;
      if (angle < 0) angle += 180.0;
      const int bin = static_cast<int>(std::floor((angle + 22.5) / 45.0)) % 4;
      const int dx = kStep[bin][0], dy = kStep[bin][1];
      const float prev = mag(reflect101(y - dy, h), reflect101(x - dx, w));
      const float next = mag(reflect101(y + dy, h), reflect101(x + dx, w));
      if (m > prev && m >= next) thin(y, x) = m;
    }
  }

  EdgeMap edges = EdgeMap::Zero(h, w);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (thin(y, x) > profile.canny_hi && !edges(y, x)) {
        edges(y, x) = 1;
        stack.emplace_back(x, y);
        while (!stack.empty()) {
          const auto [cx, cy] = stack.back();
          stack.pop_back();
          for (int ny = cy - 1; ny <= cy + 1; ++ny) {
            for (int nx = cx - 1; nx <= cx + 1; ++nx) {
              if (nx < 0 || ny < 0 || nx >= w || ny >= h || edges(ny, nx)) continue;
              if (thin(ny, nx) > profile.canny_lo) {
                edges(ny, nx) = 1;
                stack.emplace_back(nx, ny);
              }
            }
          }
        }
      }
    }
  }
  return edges;
}

EdgeMap edges_sobel(const GrayImage& img, const DetectorProfile& profile) {
  const Gradients g = sobel_gradients(img);
  const GrayImage mag = (g.gx.square() + g.gy.square()).sqrt();
  return (mag > static_cast<float>(profile.sobel_mag_t)).cast<uint8_t>();
}

}  // namespace deepdetect
