#include "deepdetect/detectors.hpp"

#include "deepdetect/errors.hpp"
#include "deepdetect/imgproc.hpp"

#include <cmath>

namespace deepdetect {

namespace {

constexpr int kCornerMargin = 2;

void require_corner_size(const GrayImage& img) {
  if (img.cols() < 5 || img.rows() < 5) throw InvalidArgument("corner detectors need an image of at least 5x5");
}

KeypointList threshold_and_suppress(const GrayImage& response, double rel_t, int radius) {
  const float peak = response.maxCoeff();
  if (!(peak > 0.0f)) return {};
  return nms_keypoints(response, radius, static_cast<float>(rel_t * peak), kCornerMargin);
}

}  // namespace

StructureTensor structure_tensor(const GrayImage& img) {
  const Gradients g = sobel_gradients(img);
  const GrayImage xx = g.gx * g.gx;
  const GrayImage xy = g.gx * g.gy;
  const GrayImage yy = g.gy * g.gy;
  return {gaussian_blur(xx, 1.0), gaussian_blur(xy, 1.0), gaussian_blur(yy, 1.0)};
}

GrayImage harris_response(const GrayImage& img, double k) {
  const StructureTensor m = structure_tensor(img);
  const auto a = m.xx.cast<double>(), b = m.xy.cast<double>(), c = m.yy.cast<double>();
  return ((a * c - b * b) - k * (a + c).square()).cast<float>();
}

GrayImage min_eigen_response(const GrayImage& img) {
  const StructureTensor m = structure_tensor(img);
  const auto a = m.xx.cast<double>(), b = m.xy.cast<double>(), c = m.yy.cast<double>();
  const Plane<double> half_diff = 0.5 * (a - c);
  return (0.5 * (a + c) - (half_diff.square() + b.square()).sqrt()).max(0.0).cast<float>();
}

KeypointList detect_harris(const GrayImage& img, const DetectorProfile& profile) {
  require_corner_size(img);
  return threshold_and_suppress(harris_response(img, profile.harris_k), profile.harris_rel_t, profile.nms_radius);
}

KeypointList detect_shi_tomasi(const GrayImage& img, const DetectorProfile& profile) {
  require_corner_size(img);
  return threshold_and_suppress(min_eigen_response(img), profile.shi_rel_t, profile.nms_radius);
}

}  // namespace deepdetect
