#include "deepdetect/detectors.hpp"

#include "deepdetect/errors.hpp"

namespace deepdetect {

DetectorProfile DetectorProfile::normal() { return DetectorProfile{}; }

DetectorProfile DetectorProfile::low() {
  DetectorProfile p;
  p.name = ProfileName::Low;
  p.fast_t = 5;
  p.harris_rel_t = 1e-4;
  p.shi_rel_t = 1e-4;
  p.dog_contrast_t = 0.5;
  p.dog_edge_r = 20.0;
  p.canny_lo = 5.0;
  p.canny_hi = 15.0;
  p.sobel_mag_t = 100.0;
  p.nms_radius = 1;
  return p;
}

DetectorProfile DetectorProfile::for_name(ProfileName name) {
  return name == ProfileName::Low ? low() : normal();
}

void DetectorProfile::validate() const {
  if (fast_t < 0 || harris_k < 0 || harris_rel_t < 0 || shi_rel_t < 0 || dog_contrast_t < 0 || dog_edge_r <= 0 ||
      canny_lo < 0 || canny_hi < 0 || sobel_mag_t < 0 || nms_radius < 0) {
    throw InvalidArgument("detector profile thresholds must be non-negative");
  }
  if (canny_lo > canny_hi) throw InvalidArgument("canny_lo must not exceed canny_hi");
  if (brisk_octaves < 1 || orb_levels < 1 || orb_scale <= 1.0) {
    throw InvalidArgument("pyramid settings need >= 1 level and scale factor > 1");
  }
}

std::string_view profile_label(ProfileName name) { return name == ProfileName::Low ? "low" : "normal"; }

std::optional<ProfileName> parse_profile_name(std::string_view text) {
  if (text == "normal") return ProfileName::Normal;
  if (text == "low") return ProfileName::Low;
  return std::nullopt;
}

std::string_view detector_label(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::SiftDog: return "sift-dog";
    case DetectorKind::Orb: return "orb";
    case DetectorKind::Brisk: return "brisk";
    case DetectorKind::Fast: return "fast";
    case DetectorKind::Agast: return "agast";
    case DetectorKind::Harris: return "harris";
    case DetectorKind::ShiTomasi: return "shi-tomasi";
  }
  return "unknown";
}

std::optional<DetectorKind> parse_detector_kind(std::string_view text) {
  for (DetectorKind k : kAllDetectors)
    if (detector_label(k) == text) return k;
  return std::nullopt;
}

KeypointList detect(DetectorKind kind, const GrayImage& img, const DetectorProfile& profile) {
  switch (kind) {
    case DetectorKind::SiftDog: return detect_dog(img, profile);
    case DetectorKind::Orb: return detect_orb(img, profile);
    case DetectorKind::Brisk: return detect_brisk(img, profile);
    case DetectorKind::Fast: return detect_fast(img, profile);
    case DetectorKind::Agast: return detect_agast(img, profile);
    case DetectorKind::Harris: return detect_harris(img, profile);
    case DetectorKind::ShiTomasi: return detect_shi_tomasi(img, profile);
  }
  throw InvalidArgument("unknown detector");
}

EdgeMap detect_edges(EdgeKind kind, const GrayImage& img, const DetectorProfile& profile) {
  return kind == EdgeKind::Canny ? edges_canny(img, profile) : edges_sobel(img, profile);
}

}  // namespace deepdetect
