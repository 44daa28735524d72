#include "deepdetect/detectors.hpp"

#include "deepdetect/errors.hpp"
#include "deepdetect/imgproc.hpp"

#include <algorithm>
#include <cmath>

namespace deepdetect {

namespace {

constexpr int kMinLayer = 7;

void require_fast_size(const GrayImage& img) {
  if (img.cols() < kMinLayer || img.rows() < kMinLayer) throw InvalidArgument("detector needs an image of at least 7x7");
}

Keypoint to_base(const Keypoint& kp, double scale, const GrayImage& base) {
  Keypoint out = kp;
  out.x = std::min(static_cast<float>(kp.x * scale), static_cast<float>(base.cols() - 1));
  out.y = std::min(static_cast<float>(kp.y * scale), static_cast<float>(base.rows() - 1));
  out.scale = static_cast<float>(scale);
  return out;
}

float patch_max(const GrayImage& scores, double x, double y) {
  const int cx = static_cast<int>(std::lround(x)), cy = static_cast<int>(std::lround(y));
  float best = 0.0f;
  for (int yy = cy - 1; yy <= cy + 1; ++yy) {
    for (int xx = cx - 1; xx <= cx + 1; ++xx) {
      if (xx >= 0 && yy >= 0 && xx < scores.cols() && yy < scores.rows()) best = std::max(best, scores(yy, xx));
    }
  }
  return best;
}

}  // namespace

KeypointList detect_orb(const GrayImage& img, const DetectorProfile& profile) {
  require_fast_size(img);
  struct Ranked {
    Keypoint kp;
    int level;
  };
  std::vector<Ranked> ranked;
  for (int level = 0; level < profile.orb_levels; ++level) {
    const double scale = std::pow(profile.orb_scale, level);
    const int w = static_cast<int>(std::lround(img.cols() / scale));
    const int h = static_cast<int>(std::lround(img.rows() / scale));
    if (w < kMinLayer || h < kMinLayer) break;
    const GrayImage layer = level == 0 ? img : resize_bilinear(img, w, h);
    const KeypointList corners = nms_keypoints(fast_score_map(layer, profile.fast_t), profile.nms_radius, 0.0f);
    if (corners.empty()) continue;
    const GrayImage harris = harris_response(layer, profile.harris_k);
    for (Keypoint kp : corners) {
      kp.score = harris(static_cast<int>(kp.y), static_cast<int>(kp.x));
      ranked.push_back({to_base(kp, scale, img), level});
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) { return a.kp.score > b.kp.score; });
  KeypointList out;
  out.reserve(ranked.size());
  for (const Ranked& r : ranked) out.push_back(r.kp);
  return out;
}

std::vector<ScaleLayer> brisk_layers(const GrayImage& img, int octaves) {
  std::vector<ScaleLayer> layers;
  for (int o = 0; o < octaves; ++o) {
    for (double factor : {1.0, 1.5}) {
      const double scale = factor * std::ldexp(1.0, o);
      const int w = static_cast<int>(std::lround(img.cols() / scale));
      const int h = static_cast<int>(std::lround(img.rows() / scale));
      if (w < kMinLayer || h < kMinLayer) return layers;
      layers.push_back({scale == 1.0 ? img : resize_bilinear(img, w, h), scale});
    }
  }
  return layers;
}

KeypointList detect_brisk(const GrayImage& img, const DetectorProfile& profile) {
  require_fast_size(img);
  const std::vector<ScaleLayer> layers = brisk_layers(img, profile.brisk_octaves);
  std::vector<GrayImage> scores;
  for (const ScaleLayer& layer : layers) scores.push_back(fast_score_map(layer.image, profile.fast_t));

  KeypointList out;
  for (size_t l = 0; l < layers.size(); ++l) {
    for (const Keypoint& kp : nms_keypoints(scores[l], profile.nms_radius, 0.0f)) {
      bool keep = true;
      for (int d : {-1, 1}) {
        const auto n = static_cast<std::ptrdiff_t>(l) + d;
        if (n < 0 || n >= static_cast<std::ptrdiff_t>(layers.size())) continue;
        const double ratio = layers[l].scale / layers[n].scale;
        if (patch_max(scores[n], kp.x * ratio, kp.y * ratio) > kp.score) keep = false;
      }
      if (keep) out.push_back(to_base(kp, layers[l].scale, img));
    }
  }
  return out;
}

}  // namespace deepdetect
