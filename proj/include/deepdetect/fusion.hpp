#pragma once

#include "deepdetect/dataset.hpp"
#include "deepdetect/detectors.hpp"

#include <filesystem>
#include <optional>
#include <span>

namespace deepdetect {

// Sets round(y), round(x) for every keypoint, optionally dilated by a square
// of the given radius. Throws InvalidArgument naming the first out-of-bounds keypoint.
BinaryMask rasterize_keypoints(const KeypointList& kps, int width, int height, int dilation_radius = 0);

// Pixel-wise OR. Throws InvalidArgument on an empty list or mismatched sizes.
BinaryMask fuse_masks(std::span<const BinaryMask> masks);

// The nine constituent masks of a label: the seven corner detectors in
// kAllDetectors order followed by Canny and Sobel.
std::vector<BinaryMask> label_components(const GrayImage& gray, const DetectorProfile& profile, int dilation_radius = 0);

BinaryMask build_label(const RgbImage& img, const DetectorProfile& profile, int dilation_radius = 0);

struct ProfileSet {
  DetectorProfile normal = DetectorProfile::normal();
  DetectorProfile low = DetectorProfile::low();
};

// An explicit flag wins; otherwise Low when mean luma < 60 or luma std < 20.
DetectorProfile select_profile(const RgbImage& img, std::optional<bool> low_visibility = std::nullopt,
                               const ProfileSet& profiles = {});

struct CorpusOptions {
  double degrade_fraction = 0.25;
  uint64_t seed = 0;
  ProfileSet profiles;
  int dilation_radius = 0;
};

// Reads every file of src_dir in sorted order, degrades floor(fraction * N)
// seeded picks (alpha ~ U(0.1, 0.4), beta ~ U(-100, -50)) and labels them with
// the Low profile, labels the rest via select_profile, and writes
// out_dir/images, out_dir/masks and out_dir/manifest.jsonl.
// Unreadable files are skipped and counted. Throws InvalidArgument when
// nothing readable remains.
Manifest generate_corpus(const std::filesystem::path& src_dir, const std::filesystem::path& out_dir,
                         const CorpusOptions& options);

}  // namespace deepdetect
