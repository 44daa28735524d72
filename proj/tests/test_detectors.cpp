#include "deepdetect/detectors.hpp"
#include "deepdetect/errors.hpp"
#include "deepdetect/imgproc.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace deepdetect;
using namespace deepdetect::testing;

namespace {

DetectorProfile with_fast_t(int t) {
  DetectorProfile p = DetectorProfile::normal();
  p.fast_t = t;
  return p;
}

int count_near(const KeypointList& kps, double x, double y, double radius) {
  int n = 0;
  for (const auto& k : kps) n += std::hypot(k.x - x, k.y - y) <= radius;
  return n;
}

GrayImage gaussian_blob(int size, double cx, double cy, double sigma) {
  GrayImage img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      img(y, x) = static_cast<float>(255.0 * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2 * sigma * sigma)));
  return img;
}

}  // namespace

TEST_CASE("profiles") {
  const auto n = DetectorProfile::normal();
  const auto l = DetectorProfile::low();
  CHECK(l.fast_t <= n.fast_t);
  CHECK(l.harris_rel_t <= n.harris_rel_t);
  CHECK(l.shi_rel_t <= n.shi_rel_t);
  CHECK(l.dog_contrast_t <= n.dog_contrast_t);
  CHECK(l.canny_lo <= n.canny_lo);
  CHECK(l.canny_hi <= n.canny_hi);
  CHECK(l.sobel_mag_t <= n.sobel_mag_t);
  CHECK(l.nms_radius <= n.nms_radius);
  n.validate();
  l.validate();
  DetectorProfile bad = n;
  bad.fast_t = -1;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  for (DetectorKind k : kAllDetectors) CHECK(parse_detector_kind(detector_label(k)) == k);
  CHECK_FALSE(parse_detector_kind("surf"));
}

TEST_CASE("FAST") {
  CHECK(detect_fast(constant_gray(32, 32, 77.0f), DetectorProfile::low()).empty());

  SUBCASE("single corner at the apex of a bright quadrant") {
    const KeypointList kps = detect_fast(corner_image(40, 40, 20, 20), with_fast_t(20));
    REQUIRE(kps.size() == 1);
    CHECK(count_near(kps, 20, 20, 2.0) == 1);
  }

  SUBCASE("matches the brute-force segment test on noise") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
      const GrayImage img = random_gray(64, 64, 100 + seed);
      for (const DetectorProfile& p : {DetectorProfile::normal(), DetectorProfile::low()}) {
        CHECK(oracle::as_set(detect_fast(img, p)) == oracle::fast_corners(img, p.fast_t, p.nms_radius));
      }
    }
  }

  SUBCASE("score map agrees with the oracle score") {
    const GrayImage img = random_gray(24, 24, 3);
    const GrayImage scores = fast_score_map(img, 10);
    for (int y = 3; y < 21; ++y)
      for (int x = 3; x < 21; ++x) CHECK(scores(y, x) == doctest::Approx(oracle::fast_score(img, x, y, 10)));
  }

  CHECK_THROWS_AS(detect_fast(constant_gray(6, 20, 0.0f), DetectorProfile::normal()), InvalidArgument);
}

TEST_CASE("AGAST is set-identical to FAST") {
  CHECK(detect_agast(constant_gray(32, 32, 10.0f), DetectorProfile::low()).empty());
  const KeypointList corner = detect_agast(corner_image(40, 40, 20, 20), with_fast_t(20));
  REQUIRE(corner.size() == 1);
  CHECK(count_near(corner, 20, 20, 2.0) == 1);
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const GrayImage img = seed % 2 ? random_gray(64, 64, seed) : textured_gray(64, 64, seed);
    for (int t : {0, 5, 20, 60}) {
      const DetectorProfile p = with_fast_t(t);
      CHECK(oracle::as_set(detect_agast(img, p)) == oracle::as_set(detect_fast(img, p)));
    }
  }
  CHECK_THROWS_AS(detect_agast(constant_gray(20, 6, 0.0f), DetectorProfile::normal()), InvalidArgument);
}

TEST_CASE("Harris") {
  CHECK(detect_harris(constant_gray(16, 16, 9.0f), DetectorProfile::normal()).empty());
  CHECK(detect_harris(vertical_step(32, 32, 15), DetectorProfile::low()).empty());

  SUBCASE("four square corners") {
    const KeypointList kps = detect_harris(square_image(32, 32, 8, 8, 24, 24), DetectorProfile::normal());
    CHECK(kps.size() == 4);
    for (auto [cx, cy] : {std::pair{7.5, 7.5}, {23.5, 7.5}, {7.5, 23.5}, {23.5, 23.5}}) {
      CHECK(count_near(kps, cx, cy, 2.0) == 1);
    }
  }

  SUBCASE("response map and maxima agree with the exhaustive oracle") {
    for (uint64_t seed = 0; seed < 4; ++seed) {
      const GrayImage img = textured_gray(40, 36, seed);
      const DetectorProfile p = DetectorProfile::normal();
      const GrayImage lib = harris_response(img, p.harris_k);
      const Plane<double> ref = oracle::harris(img, p.harris_k);
      const double scale = ref.abs().maxCoeff();
      CHECK((lib.cast<double>() - ref).abs().maxCoeff() <= 1e-4 * scale);
      const double peak = lib.maxCoeff();
      CHECK(oracle::as_set(detect_harris(img, p)) ==
            oracle::local_maxima(lib, p.nms_radius, static_cast<float>(p.harris_rel_t * peak), 2));
    }
  }
  CHECK_THROWS_AS(detect_harris(constant_gray(4, 10, 0.0f), DetectorProfile::normal()), InvalidArgument);
}

TEST_CASE("Shi-Tomasi") {
  CHECK(detect_shi_tomasi(constant_gray(16, 16, 9.0f), DetectorProfile::normal()).empty());
  const GrayImage square = square_image(32, 32, 8, 8, 24, 24);
  const KeypointList kps = detect_shi_tomasi(square, DetectorProfile::normal());
  CHECK(kps.size() == 4);
  for (auto [cx, cy] : {std::pair{7.5, 7.5}, {23.5, 7.5}, {7.5, 23.5}, {23.5, 23.5}}) {
    CHECK(count_near(kps, cx, cy, 2.0) == 1);
  }

  for (uint64_t seed = 0; seed < 3; ++seed) {
    const GrayImage img = textured_gray(40, 40, 50 + seed);
    const DetectorProfile p = DetectorProfile::normal();
    const Plane<double> ref = oracle::min_eigen(img);
    const GrayImage lib = min_eigen_response(img);
    CHECK((lib.cast<double>() - ref).abs().maxCoeff() <= 1e-4 * ref.maxCoeff());
    const float floor = static_cast<float>(p.shi_rel_t * lib.maxCoeff());
    const KeypointList found = detect_shi_tomasi(img, p);
    for (const auto& k : found) CHECK(lib(static_cast<int>(k.y), static_cast<int>(k.x)) >= floor);
    CHECK(oracle::as_set(found) == oracle::local_maxima(lib, p.nms_radius, floor, 2));
  }
}

TEST_CASE("DoG") {
  CHECK(detect_dog(constant_gray(64, 64, 128.0f), DetectorProfile::low()).empty());

  SUBCASE("Gaussian blob is found at its center and scale") {
    const KeypointList kps = detect_dog(gaussian_blob(64, 32, 32, 4.0), DetectorProfile::normal());
    const double step = std::pow(2.0, 1.0 / 3.0);
    bool found = false;
    for (const auto& k : kps) {
      if (std::hypot(k.x - 32, k.y - 32) <= 3.0 && k.scale >= 4.0 / step - 1e-6 && k.scale <= 4.0 * step + 1e-6) {
        found = true;
      }
    }
    CHECK(found);
  }

  SUBCASE("straight step edges are rejected") {
    CHECK(detect_dog(vertical_step(64, 64, 31), DetectorProfile::normal()).empty());
    CHECK(detect_dog(vertical_step(64, 64, 31), DetectorProfile::low()).empty());
  }

  SUBCASE("keypoints stay inside the image") {
    const GrayImage img = textured_gray(80, 50, 4);
    for (const auto& k : detect_dog(img, DetectorProfile::low())) {
      CHECK(k.x >= 0);
      CHECK(k.x < 80);
      CHECK(k.y >= 0);
      CHECK(k.y < 50);
    }
  }
  CHECK_THROWS_AS(detect_dog(constant_gray(31, 64, 0.0f), DetectorProfile::normal()), InvalidArgument);
}

TEST_CASE("ORB detection stage") {
  CHECK(detect_orb(constant_gray(64, 64, 3.0f), DetectorProfile::low()).empty());
  const KeypointList kps = detect_orb(corner_image(64, 64, 32, 32), with_fast_t(20));
  bool apex = false;
  for (const auto& k : kps) apex = apex || (k.scale == 1.0f && std::hypot(k.x - 32, k.y - 32) <= 2.0);
  CHECK(apex);
  for (size_t i = 1; i < kps.size(); ++i) CHECK(kps[i - 1].score >= kps[i].score);

  const KeypointList tex = detect_orb(textured_gray(90, 70, 2), DetectorProfile::low());
  CHECK_FALSE(tex.empty());
  for (const auto& k : tex) {
    CHECK(k.x >= 0);
    CHECK(k.x < 90);
    CHECK(k.y >= 0);
    CHECK(k.y < 70);
  }
}

TEST_CASE("BRISK detection stage") {
  CHECK(detect_brisk(constant_gray(64, 64, 3.0f), DetectorProfile::low()).empty());
  const KeypointList kps = detect_brisk(corner_image(64, 64, 32, 32), with_fast_t(20));
  CHECK(count_near(kps, 32, 32, 3.0) >= 1);

  SUBCASE("every keypoint dominates its scale neighbors") {
    const GrayImage img = textured_gray(96, 96, 8);
    const DetectorProfile p = DetectorProfile::low();
    const auto layers = brisk_layers(img, p.brisk_octaves);
    std::vector<GrayImage> scores;
    for (const auto& l : layers) scores.push_back(fast_score_map(l.image, p.fast_t));
    const KeypointList found = detect_brisk(img, p);
    CHECK_FALSE(found.empty());
    for (const auto& k : found) {
      size_t l = 0;
      while (layers[l].scale != k.scale) ++l;
      const double lx = k.x / k.scale, ly = k.y / k.scale;
      const float own = k.score;
      for (int d : {-1, 1}) {
        const auto n = static_cast<std::ptrdiff_t>(l) + d;
        if (n < 0 || n >= static_cast<std::ptrdiff_t>(layers.size())) continue;
        const double r = layers[l].scale / layers[n].scale;
        const int cx = static_cast<int>(std::lround(lx * r)), cy = static_cast<int>(std::lround(ly * r));
        for (int yy = cy - 1; yy <= cy + 1; ++yy)
          for (int xx = cx - 1; xx <= cx + 1; ++xx)
            if (xx >= 0 && yy >= 0 && xx < scores[n].cols() && yy < scores[n].rows()) CHECK(own >= scores[n](yy, xx));
      }
    }
  }
}

TEST_CASE("Canny") {
  CHECK((edges_canny(constant_gray(32, 32, 40.0f), DetectorProfile::low()) == 0).all());

  SUBCASE("vertical step gives one thin line") {
    const int c = 15;
    const EdgeMap e = edges_canny(vertical_step(32, 40, c), DetectorProfile::normal());
    int rows_hit = 0;
    for (int y = 0; y < 40; ++y) {
      const int n = e.row(y).cast<int>().sum();
      CHECK(n <= 1);
      if (n == 1) {
        int x = 0;
        while (!e(y, x)) ++x;
        CHECK(std::abs(x - c) <= 1);
        ++rows_hit;
      }
    }
    CHECK(rows_hit >= 36);
  }

  SUBCASE("weak step below the high threshold is ignored") {
    DetectorProfile p = DetectorProfile::normal();
    p.canny_lo = 20;
    p.canny_hi = 50;
    CHECK((edges_canny(vertical_step(32, 32, 15, 100.0f, 105.0f), p) == 0).all());
  }

  SUBCASE("thinness along the quantized gradient direction") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
      const GrayImage img = gaussian_blur(textured_gray(64, 64, 20 + seed), 1.0);
      const EdgeMap e = edges_canny(img, DetectorProfile::low());
      const Gradients g = sobel_gradients(gaussian_blur(img, 1.4));
      for (int y = 1; y < 63; ++y) {
        for (int x = 1; x < 63; ++x) {
          if (!e(y, x)) continue;
          double a = std::atan2(g.gy(y, x), g.gx(y, x)) * 180.0 / M_PI;
          if (a < 0) a += 180.0;
          const int bin = static_cast<int>(std::floor((a + 22.5) / 45.0)) % 4;
          const int step[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
          const int dx = step[bin][0], dy = step[bin][1];
          CHECK_FALSE((e(y + dy, x + dx) && e(y - dy, x - dx)));
        }
      }
    }
  }
  CHECK_THROWS_AS(edges_canny(constant_gray(4, 32, 0.0f), DetectorProfile::normal()), InvalidArgument);
}

TEST_CASE("Sobel edges") {
  CHECK((edges_sobel(constant_gray(16, 16, 4.0f), DetectorProfile::low()) == 0).all());
  const int c = 10;
  DetectorProfile p = DetectorProfile::normal();
  p.sobel_mag_t = 500;
  const EdgeMap e = edges_sobel(vertical_step(24, 20, c), p);
  for (int y = 1; y < 19; ++y) {
    for (int x = 0; x < 24; ++x) CHECK(e(y, x) == ((x == c || x == c + 1) ? 1 : 0));
  }
  p.sobel_mag_t = 2000;
  CHECK((edges_sobel(vertical_step(24, 20, c), p) == 0).all());
  CHECK_THROWS_AS(edges_sobel(constant_gray(2, 2, 0.0f), p), InvalidArgument);
}

TEST_CASE("detector properties") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const GrayImage img = textured_gray(72, 64, 300 + seed);
    for (DetectorKind kind : kAllDetectors) {
      CAPTURE(detector_label(kind));
      const KeypointList normal = detect(kind, img, DetectorProfile::normal());
      const KeypointList low = detect(kind, img, DetectorProfile::low());
      CHECK(low.size() >= normal.size());
      const KeypointList again = detect(kind, img, DetectorProfile::low());
      REQUIRE(again.size() == low.size());
      for (size_t i = 0; i < low.size(); ++i) {
        CHECK(again[i].x == low[i].x);
        CHECK(again[i].y == low[i].y);
        CHECK(again[i].score == low[i].score);
      }
      for (const auto& k : low) {
        CHECK((k.x >= 0 && k.x < 72 && k.y >= 0 && k.y < 64));
        CHECK(std::isfinite(k.score));
      }
    }
    for (EdgeKind kind : kAllEdgeDetectors) {
      const EdgeMap n = detect_edges(kind, img, DetectorProfile::normal());
      const EdgeMap l = detect_edges(kind, img, DetectorProfile::low());
      CHECK(n.rows() == 64);
      CHECK(n.cols() == 72);
      CHECK(l.cast<int>().sum() >= n.cast<int>().sum());
    }
  }
}
