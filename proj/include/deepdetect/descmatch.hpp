#pragma once

#include "deepdetect/homography.hpp"
#include "deepdetect/image.hpp"

#include <array>
#include <bitset>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace deepdetect {

enum class DescriptorKind { Float128, Binary256 };

struct Descriptor {
  DescriptorKind kind = DescriptorKind::Float128;
  std::array<float, 128> values{};  // Float128 payload
  std::bitset<256> bits;            // Binary256 payload
  bool degenerate = false;          // Float128 with no gradient energy; all zeros

  bool operator==(const Descriptor&) const = default;
};

using DescriptorList = std::vector<Descriptor>;

// 4x4 cells x 8 orientation bins over a 16x16 sample grid spanning
// 2 * scale pixels, Gaussian-weighted (sigma = half the patch width) with
// trilinear binning. Oriented mode first rotates the grid to the peak of a
// 36-bin gradient orientation histogram. L2-normalized, clamped at 0.2,
// renormalized. Samples outside the image reflect.
DescriptorList sift_describe(const GrayImage& img, const KeypointList& kps, bool oriented = false);

// Dominant gradient orientation (radians) used by oriented SIFT.
double dominant_orientation(const GrayImage& img, const Keypoint& kp);

// 256 comparisons I(p) > I(q) on the sigma 2 blurred image, pairs drawn from
// a seeded pattern in a 31x31 window; ties give 0.
DescriptorList brief_describe(const GrayImage& img, const KeypointList& kps, uint64_t seed = 0);

struct BriefPair {
  int px, py, qx, qy;
};
std::vector<BriefPair> brief_pattern(uint64_t seed);

// L2 for Float128, Hamming for Binary256. Kinds must agree.
double descriptor_distance(const Descriptor& a, const Descriptor& b);

struct MatchPair {
  int index_a = 0;
  int index_b = 0;
  float distance = 0.0f;
  float ratio = 0.0f;  // NN1 / NN2; 0 when there is no second neighbour
  bool operator==(const MatchPair&) const = default;
};

using MatchList = std::vector<MatchPair>;

inline constexpr double kDefaultNndrRatio = 0.8;

// For each a, exhaustive nearest and second-nearest b (lowest index wins
// ties); kept when there is no second neighbour or NN1/NN2 < ratio. When
// NN2 is at distance 0 the ratio is 1. Degenerate descriptors never match.
MatchList nndr_match(const DescriptorList& a, const DescriptorList& b, double ratio = kDefaultNndrRatio);

// Keeps matches whose b descriptor has the a descriptor as its own nearest
// neighbour in A (lowest index on ties).
MatchList cross_check(const MatchList& matches, const DescriptorList& a, const DescriptorList& b);

// Matches whose a keypoint, projected by h, lands within eps (strict) of its b keypoint.
int count_correct(const MatchList& matches, const KeypointList& kps_a, const KeypointList& kps_b, const Homography& h,
                  double eps = 1.0);

// Normalized DLT over >= 4 correspondences (least squares beyond 4).
// Throws InsufficientData for fewer than 4 points, InvalidArgument when the
// configuration is degenerate.
Homography fit_homography_dlt(const std::vector<Eigen::Vector2d>& src, const std::vector<Eigen::Vector2d>& dst);

struct RansacResult {
  Homography h;
  std::vector<bool> inliers;  // per match
  int n_inliers = 0;
  int iterations = 0;
};

// Seeded 4-point RANSAC; the best model is refit on its inliers. Samples with
// three collinear points are skipped but still consume an iteration.
RansacResult ransac_homography(const KeypointList& kps_a, const KeypointList& kps_b, const MatchList& matches,
                               int iters = 2000, double inlier_eps = 1.0, uint64_t seed = 0);

// CSV "ia,ib,distance,ratio".
void write_matches(std::ostream& out, const MatchList& matches);
MatchList read_matches(std::istream& in);
void save_matches(const std::filesystem::path& path, const MatchList& matches);
MatchList load_matches(const std::filesystem::path& path);

}  // namespace deepdetect
