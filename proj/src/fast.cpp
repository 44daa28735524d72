#include "deepdetect/detectors.hpp"

#include "deepdetect/errors.hpp"

#include <array>
#include <bitset>
#include <cmath>
#include <optional>

namespace deepdetect {

namespace {

constexpr int kArc = 9;

void require_fast_size(const GrayImage& img) {
  if (img.cols() < 7 || img.rows() < 7) throw InvalidArgument("FAST needs an image of at least 7x7");
}

// Largest |contrast| sum over maximal circular runs of set bits with length >= 9.
float best_arc_score(uint32_t bits, const std::array<float, 16>& contrast) {
  if (bits == 0xFFFFu) {
    float s = 0.0f;
    for (float c : contrast) s += c;
    return s;
  }
  int start = 0;
  while (bits & (1u << start)) ++start;  // first clear bit anchors the scan
  float best = 0.0f;
  int run = 0;
  float sum = 0.0f;
  for (int k = 1; k <= 16; ++k) {
    const int i = (start + k) % 16;
    if (bits & (1u << i)) {
      ++run;
      sum += contrast[i];
    } else {
      if (run >= kArc) best = std::max(best, sum);
      run = 0;
      sum = 0.0f;
    }
  }
  return best;
}

struct CircleSample {
  uint32_t brighter = 0;
  uint32_t darker = 0;
  std::array<float, 16> contrast{};
};

CircleSample sample_circle(const GrayImage& img, int x, int y, int t) {
  CircleSample s;
  const float c = img(y, x);
  for (int i = 0; i < 16; ++i) {
    const float v = img(y + kCircleDy[i], x + kCircleDx[i]);
    s.contrast[i] = std::abs(v - c);
    if (v > c + t) s.brighter |= 1u << i;
    if (v < c - t) s.darker |= 1u << i;
  }
  return s;
}

float corner_score(const CircleSample& s) {
  return std::max(best_arc_score(s.brighter, s.contrast), best_arc_score(s.darker, s.contrast));
}

// Sequential scan: longest circular run, walking the doubled circle.
bool has_arc_scan(uint32_t bits) {
  int run = 0;
  for (int k = 0; k < 32; ++k) {
    if (bits & (1u << (k % 16))) {
      if (++run >= kArc) return true;
    } else {
      run = 0;
    }
  }
  return false;
}

const std::bitset<65536>& arc_table() {
  static const std::bitset<65536> table = [] {
    std::bitset<65536> t;
    for (uint32_t m = 0; m < 65536; ++m) t[m] = has_arc_scan(m);
    return t;
  }();
  return table;
}

template <typename IsCorner>
GrayImage score_map(const GrayImage& img, IsCorner&& is_corner) {
  const int w = width_of(img), h = height_of(img);
  GrayImage scores = GrayImage::Zero(h, w);
  for (int y = 3; y < h - 3; ++y) {
    for (int x = 3; x < w - 3; ++x) {
      if (auto s = is_corner(x, y)) scores(y, x) = *s;
    }
  }
  return scores;
}

}  // namespace

GrayImage fast_score_map(const GrayImage& img, int threshold) {
  return score_map(img, [&](int x, int y) -> std::optional<float> {
    const CircleSample s = sample_circle(img, x, y, threshold);
    if (!has_arc_scan(s.brighter) && !has_arc_scan(s.darker)) return std::nullopt;
    return corner_score(s);
  });
}

KeypointList nms_keypoints(const GrayImage& response, int radius, float min_response, int margin) {
  const int w = width_of(response), h = height_of(response);
  KeypointList out;
  for (int y = margin; y < h - margin; ++y) {
    for (int x = margin; x < w - margin; ++x) {
      const float v = response(y, x);
      if (!(v > min_response)) continue;
      bool keep = true;
      for (int dy = -radius; dy <= radius && keep; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= w || (dx == 0 && dy == 0)) continue;
          const float q = response(yy, xx);
          const bool before = dy < 0 || (dy == 0 && dx < 0);
          if (before ? q >= v : q > v) {
            keep = false;
            break;
          }
        }
      }
      if (keep) out.push_back({static_cast<float>(x), static_cast<float>(y), v, 8.0f});
    }
  }
  return out;
}

KeypointList detect_fast(const GrayImage& img, const DetectorProfile& profile) {
  require_fast_size(img);
  return nms_keypoints(fast_score_map(img, profile.fast_t), profile.nms_radius, 0.0f);
}

KeypointList detect_agast(const GrayImage& img, const DetectorProfile& profile) {
  require_fast_size(img);
  const auto& table = arc_table();
  const int t = profile.fast_t;
  const GrayImage scores = score_map(img, [&](int x, int y) -> std::optional<float> {
    // Stage 1: any 9-arc covers at least two of the four compass pixels.
    const float c = img(y, x);
    int bright = 0, dark = 0;
    for (int i = 0; i < 16; i += 4) {
      const float v = img(y + kCircleDy[i], x + kCircleDx[i]);
      bright += v > c + t;
      dark += v < c - t;
    }
    if (bright < 2 && dark < 2) return std::nullopt;
    // Stage 2: full classification and arc lookup.
    const CircleSample s = sample_circle(img, x, y, t);
    if (!table[s.brighter] && !table[s.darker]) return std::nullopt;
    return corner_score(s);
  });
  return nms_keypoints(scores, profile.nms_radius, 0.0f);
}

}  // namespace deepdetect
