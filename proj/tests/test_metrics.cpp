#include "deepdetect/errors.hpp"
#include "deepdetect/imgproc.hpp"
#include "deepdetect/metrics.hpp"
#include "deepdetect/random.hpp"
#include "deepdetect/raster_io.hpp"
#include "test_support.hpp"

#include <Eigen/LU>
#include <doctest.h>

#include <cmath>
#include <functional>
#include <sstream>

using namespace deepdetect;
using namespace deepdetect::testing;

namespace {

Homography shift(double dx, double dy) { return Homography::translation(dx, dy); }

Homography rigid(double angle, double tx, double ty) {
  Eigen::Matrix3d m;
  m << std::cos(angle), -std::sin(angle), tx, std::sin(angle), std::cos(angle), ty, 0, 0, 1;
  return Homography(m);
}

// Kuhn's augmenting paths over an explicit edge test, with region filtering
// done point by point.
int oracle_repeated(const KeypointList& a, const KeypointList& b, const Homography& h, ImageDims da, ImageDims db,
                    double eps, int* na = nullptr, int* nb = nullptr) {
  const Eigen::Matrix3d m = h.matrix(), mi = m.inverse();
  auto apply = [](const Eigen::Matrix3d& t, double x, double y) {
    const Eigen::Vector3d p = t * Eigen::Vector3d(x, y, 1);
    return Eigen::Vector2d(p.x() / p.z(), p.y() / p.z());
  };
  auto in = [](Eigen::Vector2d p, ImageDims d) {
    return p.x() >= 0 && p.y() >= 0 && p.x() <= d.width - 1 && p.y() <= d.height - 1;
  };
  std::vector<Eigen::Vector2d> pa, pb;
  for (const auto& k : a)
    if (in(apply(m, k.x, k.y), db)) pa.push_back(apply(m, k.x, k.y));
  for (const auto& k : b)
    if (in(apply(mi, k.x, k.y), da)) pb.emplace_back(k.x, k.y);
  if (na) *na = static_cast<int>(pa.size());
  if (nb) *nb = static_cast<int>(pb.size());
  std::vector<int> owner(pb.size(), -1);
  std::function<bool(size_t, std::vector<bool>&)> augment = [&](size_t i, std::vector<bool>& seen) {
    for (size_t j = 0; j < pb.size(); ++j) {
      if (seen[j] || (pa[i] - pb[j]).norm() > eps) continue;
      seen[j] = true;
      if (owner[j] < 0 || augment(owner[j], seen)) {
        owner[j] = static_cast<int>(i);
        return true;
      }
    }
    return false;
  };
  int n = 0;
  for (size_t i = 0; i < pa.size(); ++i) {
    std::vector<bool> seen(pb.size(), false);
    n += augment(i, seen);
  }
  return n;
}

KeypointList random_points(Rng& rng, int n, ImageDims d, bool integer) {
  KeypointList out;
  for (int i = 0; i < n; ++i) {
    double x = rng.uniform(0, d.width - 1), y = rng.uniform(0, d.height - 1);
    if (integer) {
      x = std::floor(x);
      y = std::floor(y);
    }
    out.push_back({float(x), float(y), 1});
  }
  return out;
}

std::shared_ptr<const ModelWeights> tiny_net() { return std::make_shared<const ModelWeights>(init_espnet(3)); }

}  // namespace

TEST_CASE("keypoint density") {
  CHECK(keypoint_density(0, 10, 10) == 0.0);
  CHECK(keypoint_density(50, 10, 10) == 0.5);
  CHECK(keypoint_density(37, 20, 30) / keypoint_density(37, 40, 60) == doctest::Approx(4.0));
  CHECK_THROWS_AS(keypoint_density(1, 0, 10), InvalidArgument);
  CHECK_THROWS_AS(keypoint_density(1, 10, 0), InvalidArgument);
  CHECK_THROWS_AS(keypoint_density(-1, 10, 10), InvalidArgument);
}

TEST_CASE("repeatability examples") {
  const ImageDims d{100, 100};
  const KeypointList a{{20, 20, 1}, {30, 30, 1}, {40, 40, 1}, {50, 50, 1}, {60, 60, 1}};
  CHECK(repeatability(a, a, Homography(), d, d) == 1.0);

  KeypointList far;
  for (const auto& k : a) far.push_back({k.x + 3, k.y, 1});
  CHECK(repeatability(a, far, Homography(), d, d, 1.0) == 0.0);

  // Shift by (5, 0); B keeps partners for three of A's five points.
  const KeypointList b{{25, 20, 1}, {35, 30.5f, 1}, {45, 40, 1}, {80, 10, 1}};
  const auto c = repeatability_counts(a, b, shift(5, 0), d, d, 1.0);
  CHECK(c.n_a == 5);
  CHECK(c.n_b == 4);
  CHECK(c.n_common == 3);
  CHECK(c.value == 0.75);

  SUBCASE("points outside the common region do not count") {
    // A point near the right edge leaves B under the shift; a B point near
    // the left edge has no preimage in A.
    KeypointList a2 = a;
    a2.push_back({97, 50, 1});
    KeypointList b2 = b;
    b2.push_back({2, 50, 1});
    const auto c2 = repeatability_counts(a2, b2, shift(5, 0), d, d, 1.0);
    CHECK(c2.n_a == 5);
    CHECK(c2.n_b == 4);
    CHECK(c2.value == 0.75);
  }
  SUBCASE("empty sides give zero") {
    CHECK(repeatability({}, b, shift(5, 0), d, d) == 0.0);
    CHECK(repeatability(a, {}, shift(5, 0), d, d) == 0.0);
    CHECK(repeatability(a, b, shift(500, 0), d, d) == 0.0);
  }
  SUBCASE("crowded partners count once") {
    const KeypointList many{{50, 50, 1}, {50.3f, 50, 1}, {50, 50.4f, 1}};
    const KeypointList one{{50, 50, 1}, {10, 90, 1}};
    CHECK(repeatability_counts(many, one, Homography(), d, d).n_common == 1);
    CHECK(repeatability(many, one, Homography(), d, d) == 0.5);
  }
  SUBCASE("presence-only reading") {
    const auto p = repeatability_counts(a, b, shift(5, 0), d, d, 1.0, true);
    CHECK(p.value == 1.0);
    KeypointList a3 = a;
    a3.push_back({97, 50, 1});
    a3.push_back({98, 50, 1});
    const KeypointList b3{{1, 1, 1}, {2, 2, 1}, {3, 3, 1}, {4, 4, 1}, {5, 5, 1}, {6, 6, 1}, {7, 7, 1}};
    // 5 of 7 A points stay inside under the shift; min total is 7.
    CHECK(repeatability(a3, b3, shift(5, 0), d, d, 1.0, true) == doctest::Approx(5.0 / 7.0));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(repeatability(a, b, shift(5, 0), d, d, 0.0), InvalidArgument);
    CHECK_THROWS_AS(repeatability({{120, 3, 1}}, b, Homography(), d, d), InvalidArgument);
    CHECK_THROWS_AS(repeatability(a, b, Homography(), {0, 10}, d), InvalidArgument);
  }
}

TEST_CASE("repeatability agrees with an augmenting-path oracle") {
  const ImageDims da{80, 60}, db{70, 70};
  Eigen::Matrix3d m;
  m << 0.95, 0.05, 4.0, -0.04, 1.02, 3.0, 1e-4, -2e-4, 1.0;
  const Homography h(m);
  for (uint64_t seed = 0; seed < 8; ++seed) {
    Rng rng(seed);
    const bool integer = seed % 2 == 0;
    const KeypointList a = random_points(rng, 300, da, integer);
    KeypointList b = random_points(rng, 200, db, integer);
    // Plant noisy partners so the matching is non-trivial.
    for (int i = 0; i < 150; ++i) {
      const Eigen::Vector2d p = project_point(h, Eigen::Vector2d(a[i].x, a[i].y));
      const double x = p.x() + rng.uniform(-1, 1), y = p.y() + rng.uniform(-1, 1);
      if (x >= 0 && y >= 0 && x <= db.width - 1 && y <= db.height - 1) b.push_back({float(x), float(y), 1});
    }
    for (double eps : {0.5, 1.0, 2.0}) {
      int na = 0, nb = 0;
      const int expected = oracle_repeated(a, b, h, da, db, eps, &na, &nb);
      const auto c = repeatability_counts(a, b, h, da, db, eps);
      CHECK(c.n_a == na);
      CHECK(c.n_b == nb);
      CHECK(c.n_common == expected);
      CHECK(c.value >= 0.0);
      CHECK(c.value <= 1.0);
    }
  }
}

TEST_CASE("repeated count is the same from either side under a rigid map") {
  const ImageDims d{90, 90};
  const Homography h = rigid(0.3, 12.0, -8.0);
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(100 + seed);
    const KeypointList a = random_points(rng, 400, d, false);
    const KeypointList b = random_points(rng, 400, d, false);
    const auto ab = repeatability_counts(a, b, h, d, d, 1.5);
    const auto ba = repeatability_counts(b, a, h.inverse(), d, d, 1.5);
    CHECK(ab.n_common == ba.n_common);
    CHECK(ab.n_a == ba.n_b);
    CHECK(ab.n_b == ba.n_a);
  }
}

TEST_CASE("F-KP ratio") {
  BinaryMask fg = BinaryMask::Zero(10, 10);
  fg.block(0, 0, 5, 10).setOnes();  // top half
  CHECK(fkp_ratio({{1, 1, 1}, {8, 2, 1}}, fg) == 1.0);
  CHECK(fkp_ratio({{1, 1, 1}, {8, 2, 1}, {3, 7, 1}, {4, 9, 1}}, fg) == 0.5);
  CHECK(fkp_ratio({{2, 4.4f, 1}, {2, 4.6f, 1}}, fg) == 0.5);  // rounding
  CHECK_THROWS_AS(fkp_ratio({}, fg), UndefinedRatio);
  CHECK_THROWS_AS(fkp_ratio({{10, 1, 1}}, fg), InvalidArgument);
}

TEST_CASE("descriptor choice") {
  DescriptorSpec auto_spec;
  CHECK(auto_spec.resolve(DetectorSpec::classical(DetectorKind::Orb)) == DescriptorKind::Binary256);
  CHECK(auto_spec.resolve(DetectorSpec::classical(DetectorKind::Brisk)) == DescriptorKind::Binary256);
  CHECK(auto_spec.resolve(DetectorSpec::classical(DetectorKind::Harris)) == DescriptorKind::Float128);
  CHECK(auto_spec.resolve(DetectorSpec::network(tiny_net())) == DescriptorKind::Float128);
  DescriptorSpec brief{DescriptorChoice::Brief};
  CHECK(brief.resolve(DetectorSpec::classical(DetectorKind::Harris)) == DescriptorKind::Binary256);
}

TEST_CASE("self-pair evaluation") {
  const RgbImage img = to_rgb(textured_gray(96, 96, 21));
  for (DetectorKind kind : {DetectorKind::Harris, DetectorKind::Fast, DetectorKind::Orb, DetectorKind::SiftDog}) {
    CAPTURE(detector_label(kind));
    const auto det = DetectorSpec::classical(kind, ProfileName::Low);
    const PairRecord r = evaluate_pair(img, img, Homography(), det, {}, {});
    REQUIRE(r.n_a >= 10);
    CHECK(r.n_a == r.n_b);
    CHECK(r.repeatability == 1.0);
    CHECK(r.n_correct >= 0.99 * r.n_matches);
    CHECK(r.n_matches > 0);
    CHECK(r.density_a == doctest::Approx(r.n_a / (96.0 * 96.0)));
    CHECK(evaluate_pair(img, img, Homography(), det, {}, {}) == r);
  }
}

TEST_CASE("network detector evaluation") {
  const RgbImage img = to_rgb(textured_gray(32, 32, 4));
  const auto det = DetectorSpec::network(tiny_net(), 0.5);
  const KeypointList kps = run_detector(det, img);
  const InferenceResult ref = infer_mask(img, *det.weights, 0.5);
  CHECK(kps.size() == static_cast<size_t>((ref.mask.cast<int>()).sum()));
  const PairRecord r = evaluate_pair(img, img, Homography(), det, {}, {});
  CHECK(r.n_a == static_cast<int>(kps.size()));
  if (r.n_a > 0) CHECK(r.repeatability == 1.0);
  CHECK_THROWS_AS(run_detector(DetectorSpec::network(nullptr), img), InvalidArgument);
}

TEST_CASE("cross-checked matching never pairs two a with one b") {
  const RgbImage img = to_rgb(textured_gray(96, 96, 8));
  EvalSettings s;
  s.cross_check = true;
  const auto det = DetectorSpec::classical(DetectorKind::Harris, ProfileName::Low);
  const PairRecord r = evaluate_pair(img, img, Homography(), det, {}, s);
  CHECK(r.n_correct <= std::min(r.n_a, r.n_b));
  CHECK(r.n_matches > 0);
}

TEST_CASE("pair errors carry the pair id") {
  const RgbImage img = to_rgb(textured_gray(20, 20, 1));  // too small for DoG
  try {
    evaluate_pair(img, img, Homography(), DetectorSpec::classical(DetectorKind::SiftDog), {}, {}, "1-4");
    FAIL("expected an error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("pair 1-4") != std::string::npos);
  }
}

TEST_CASE("sequence evaluation") {
  TempDir dir("metrics_seq");
  const RgbImage img = to_rgb(textured_gray(64, 64, 13));
  for (int i = 1; i <= 6; ++i) save_image(img, dir / ("img" + std::to_string(i) + ".ppm"));
  for (int n = 2; n <= 6; ++n) save_homography_file(Homography(), dir / ("H1to" + std::to_string(n) + "p"));
  OxfordSequence seq = load_sequence(dir.path());

  const auto det = DetectorSpec::classical(DetectorKind::ShiTomasi, ProfileName::Low);
  const MetricsReport rep = evaluate_sequence(seq, det, {}, {});
  REQUIRE(rep.records.size() == 5);
  CHECK(rep.records.front().pair == "1-2");
  CHECK(rep.records.back().pair == "1-6");
  CHECK(rep.avg_repeatability == 1.0);
  CHECK_FALSE(rep.tau.has_value());

  double dens = 0, repeat = 0;
  long long correct = 0;
  for (const auto& r : rep.records) {
    dens += (r.density_a + r.density_b) / 2;
    repeat += r.repeatability;
    correct += r.n_correct;
  }
  CHECK(rep.avg_density == doctest::Approx(dens / 5).epsilon(1e-12));
  CHECK(rep.avg_repeatability == doctest::Approx(repeat / 5).epsilon(1e-12));
  CHECK(rep.total_correct == correct);

  SUBCASE("json round trip") {
    MetricsReport copy = rep;
    copy.tau = 0.35;
    copy.records[2].density_a = 0.1 + 0.2;
    CHECK(report_from_json(report_to_json(copy)) == copy);
    save_report_json(copy, dir / "r.json");
    CHECK(load_report_json(dir / "r.json") == copy);
    CHECK_THROWS_AS(report_from_json("{\"sequence\": 3}"), IoError);
    CHECK_THROWS_AS(report_from_json("not json"), IoError);
  }
  SUBCASE("csv") {
    std::stringstream ss;
    write_report_csv(ss, rep);
    std::string line;
    std::getline(ss, line);
    CHECK(line == "pair,n_a,n_b,repeatability,n_correct,density_a,density_b");
    int rows = 0;
    while (std::getline(ss, line)) ++rows;
    CHECK(rows == 5);
  }
  SUBCASE("missing homography") {
    seq.homographies.erase(4);
    try {
      evaluate_sequence(seq, det, {}, {});
      FAIL("expected an error");
    } catch (const IoError& e) {
      CHECK(e.kind() == IoErrorKind::MissingFile);
      CHECK(std::string(e.what()).find("H1to4p") != std::string::npos);
    }
  }
}
