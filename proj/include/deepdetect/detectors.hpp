#pragma once

#include "deepdetect/image.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace deepdetect {

enum class ProfileName { Normal, Low };

// Threshold set shared by every classical detector. Low lowers each threshold
// in the direction that yields more detections.
struct DetectorProfile {
  ProfileName name = ProfileName::Normal;
  int fast_t = 30;
  double harris_k = 0.04;
  double harris_rel_t = 0.01;
  double shi_rel_t = 0.01;
  double dog_contrast_t = 8.0;  // on the 0-255 intensity scale
  double dog_edge_r = 10.0;
  double canny_lo = 50.0;
  double canny_hi = 150.0;
  double sobel_mag_t = 600.0;
  int brisk_octaves = 3;
  int orb_levels = 4;
  double orb_scale = 1.2;
  int nms_radius = 3;

  static DetectorProfile normal();
  static DetectorProfile low();
  static DetectorProfile for_name(ProfileName name);
  // Throws InvalidArgument on negative thresholds or non-positive counts.
  void validate() const;
};

std::string_view profile_label(ProfileName name);
std::optional<ProfileName> parse_profile_name(std::string_view text);

enum class DetectorKind { SiftDog, Orb, Brisk, Fast, Agast, Harris, ShiTomasi };
enum class EdgeKind { Canny, Sobel };

inline constexpr DetectorKind kAllDetectors[] = {DetectorKind::SiftDog, DetectorKind::Orb,    DetectorKind::Brisk,
                                                 DetectorKind::Fast,    DetectorKind::Agast,  DetectorKind::Harris,
                                                 DetectorKind::ShiTomasi};
inline constexpr EdgeKind kAllEdgeDetectors[] = {EdgeKind::Canny, EdgeKind::Sobel};

std::string_view detector_label(DetectorKind kind);
std::optional<DetectorKind> parse_detector_kind(std::string_view text);

// --- corner detectors (set D) ---

KeypointList detect_fast(const GrayImage& img, const DetectorProfile& profile);
// Same FAST-9 criterion evaluated through a compass pre-test followed by a
// precomputed 2^16-entry arc table; output is set-identical to detect_fast.
KeypointList detect_agast(const GrayImage& img, const DetectorProfile& profile);
KeypointList detect_harris(const GrayImage& img, const DetectorProfile& profile);
KeypointList detect_shi_tomasi(const GrayImage& img, const DetectorProfile& profile);
KeypointList detect_dog(const GrayImage& img, const DetectorProfile& profile);
KeypointList detect_orb(const GrayImage& img, const DetectorProfile& profile);
KeypointList detect_brisk(const GrayImage& img, const DetectorProfile& profile);

KeypointList detect(DetectorKind kind, const GrayImage& img, const DetectorProfile& profile);

// --- edge detectors (set E) ---

EdgeMap edges_canny(const GrayImage& img, const DetectorProfile& profile);
EdgeMap edges_sobel(const GrayImage& img, const DetectorProfile& profile);

EdgeMap detect_edges(EdgeKind kind, const GrayImage& img, const DetectorProfile& profile);

// --- building blocks, exposed for composition and verification ---

// Radius-3 Bresenham circle, clockwise starting at (0, -3).
inline constexpr int kCircleDx[16] = {0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3, -3, -3, -2, -1};
inline constexpr int kCircleDy[16] = {-3, -3, -2, -1, 0, 1, 2, 3, 3, 3, 2, 1, 0, -1, -2, -3};

// FAST-9 score per pixel: the largest sum of |I_p - I_c| over a contiguous arc
// of >= 9 circle pixels all brighter than I_c + t or all darker than I_c - t.
// Zero where the segment test fails or within 3 px of the border.
GrayImage fast_score_map(const GrayImage& img, int threshold);

// Local maxima of `response` strictly above `min_response` within a
// (2r+1)^2 window. Ties resolve to the first pixel in raster order.
KeypointList nms_keypoints(const GrayImage& response, int radius, float min_response, int margin = 0);

struct StructureTensor {
  GrayImage xx, xy, yy;
};
// Sobel products smoothed with a sigma = 1 Gaussian window.
StructureTensor structure_tensor(const GrayImage& img);
GrayImage harris_response(const GrayImage& img, double k);
GrayImage min_eigen_response(const GrayImage& img);

struct ScaleLayer {
  GrayImage image;
  double scale = 1.0;  // base pixels per layer pixel
};
// Octaves (halving) interleaved with intra-octaves (1.5 x octave), by increasing scale.
std::vector<ScaleLayer> brisk_layers(const GrayImage& img, int octaves);

}  // namespace deepdetect
