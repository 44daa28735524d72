#include "deepdetect/fusion.hpp"

#include "deepdetect/errors.hpp"
#include "deepdetect/imgproc.hpp"
#include "deepdetect/random.hpp"
#include "deepdetect/raster_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace deepdetect {

namespace fs = std::filesystem;

BinaryMask rasterize_keypoints(const KeypointList& kps, int width, int height, int dilation_radius) {
  if (width < 1 || height < 1) throw InvalidArgument("mask dimensions must be positive");
  if (dilation_radius < 0) throw InvalidArgument("dilation radius must be non-negative");
  BinaryMask mask = BinaryMask::Zero(height, width);
  for (size_t i = 0; i < kps.size(); ++i) {
    const long cx = std::lround(kps[i].x), cy = std::lround(kps[i].y);
    if (!std::isfinite(kps[i].x) || !std::isfinite(kps[i].y) || cx < 0 || cy < 0 || cx >= width || cy >= height) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "keypoint %zu at (%g, %g) lies outside %dx%d", i, kps[i].x, kps[i].y, width,
                    height);
      throw InvalidArgument(buf);
    }
    for (long y = std::max(0L, cy - dilation_radius); y <= std::min<long>(height - 1, cy + dilation_radius); ++y)
      for (long x = std::max(0L, cx - dilation_radius); x <= std::min<long>(width - 1, cx + dilation_radius); ++x)
        mask(y, x) = 1;
  }
  return mask;
}

BinaryMask fuse_masks(std::span<const BinaryMask> masks) {
  if (masks.empty()) throw InvalidArgument("fuse_masks needs at least one mask");
  BinaryMask out = masks.front();
  for (const BinaryMask& m : masks.subspan(1)) {
    if (m.rows() != out.rows() || m.cols() != out.cols()) throw InvalidArgument("fuse_masks: mask dimensions differ");
    out = out.max(m);
  }
  return out;
}

std::vector<BinaryMask> label_components(const GrayImage& gray, const DetectorProfile& profile, int dilation_radius) {
  profile.validate();
  std::vector<BinaryMask> parts;
  for (DetectorKind kind : kAllDetectors) {
    parts.push_back(rasterize_keypoints(detect(kind, gray, profile), width_of(gray), height_of(gray), dilation_radius));
  }
  for (EdgeKind kind : kAllEdgeDetectors) parts.push_back(detect_edges(kind, gray, profile));
  return parts;
}

BinaryMask build_label(const RgbImage& img, const DetectorProfile& profile, int dilation_radius) {
  const auto parts = label_components(rgb_to_gray(img), profile, dilation_radius);
  return fuse_masks(parts);
}

DetectorProfile select_profile(const RgbImage& img, std::optional<bool> low_visibility, const ProfileSet& profiles) {
  if (low_visibility) return *low_visibility ? profiles.low : profiles.normal;
  const auto [mean, stddev] = luma_statistics(rgb_to_gray(img));
  return (mean < 60.0 || stddev < 20.0) ? profiles.low : profiles.normal;
}

Manifest generate_corpus(const fs::path& src_dir, const fs::path& out_dir, const CorpusOptions& options) {
  if (!(options.degrade_fraction >= 0.0 && options.degrade_fraction <= 1.0)) {
    throw InvalidArgument("degrade fraction must lie in [0, 1]");
  }
  if (!fs::is_directory(src_dir)) throw IoError(IoErrorKind::MissingFile, "source directory not found: " + src_dir.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(src_dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  Manifest manifest;
  std::vector<std::pair<fs::path, RgbImage>> images;
  for (const fs::path& f : files) {
    try {
      RgbImage img = load_image(f);
      if (std::min(img.width, img.height) < 32) throw InvalidArgument("image smaller than 32 px");
      images.emplace_back(f, std::move(img));
    } catch (const std::exception& e) {
      ++manifest.skipped;
      manifest.warnings.push_back(f.filename().string() + ": " + e.what());
    }
  }
  if (images.empty()) throw InvalidArgument("no readable images in " + src_dir.string());

  Rng rng(options.seed);
  std::vector<size_t> order(images.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  const auto n_degraded =
      static_cast<size_t>(std::floor(options.degrade_fraction * static_cast<double>(images.size()) + 1e-9));
  std::vector<bool> degrade(images.size(), false);
  for (size_t i = 0; i < n_degraded; ++i) degrade[order[i]] = true;

  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "masks");
  for (size_t i = 0; i < images.size(); ++i) {
    auto& [src, img] = images[i];
    char prefix[32];
    std::snprintf(prefix, sizeof prefix, "%04zu_", i);
    const std::string stem = prefix + src.stem().string();
    DetectorProfile profile;
    if (degrade[i]) {
      const double alpha = rng.uniform(0.1, 0.4);
      const double beta = rng.uniform(-100.0, -50.0);
      img = degrade_photometric(img, alpha, beta);
      profile = options.profiles.low;
    } else {
      profile = select_profile(img, std::nullopt, options.profiles);
    }
    LabeledSample s;
    s.image_path = out_dir / "images" / (stem + ".ppm");
    s.mask_path = out_dir / "masks" / (stem + ".pgm");
    s.profile_used = profile.name;
    s.degraded = degrade[i];
    s.seed = options.seed;
    save_image(img, s.image_path);
    save_mask(build_label(img, profile, options.dilation_radius), s.mask_path);
    manifest.samples.push_back(std::move(s));
  }
  write_manifest(manifest, out_dir / "manifest.jsonl");
  return manifest;
}

}  // namespace deepdetect
