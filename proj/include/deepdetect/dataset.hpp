#pragma once

#include "deepdetect/detectors.hpp"
#include "deepdetect/homography.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace deepdetect {

struct LabeledSample {
  std::filesystem::path image_path;
  std::filesystem::path mask_path;
  ProfileName profile_used = ProfileName::Normal;
  bool degraded = false;
  uint64_t seed = 0;

  bool operator==(const LabeledSample&) const = default;
};

// JSON-lines manifest: one object per sample, plus a trailing
// {"skipped": n, "warnings": [...]} record when inputs were skipped.
struct Manifest {
  std::vector<LabeledSample> samples;
  int skipped = 0;
  std::vector<std::string> warnings;
};

// Sample paths are written relative to the manifest's directory and resolved
// against it on read.
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

// Nine whitespace-separated numbers, row-major. ParseError on token count,
// non-numeric token or singular matrix.
Homography parse_homography(std::string_view text);
Homography parse_homography_file(const std::filesystem::path& path);
std::string format_homography(const Homography& h);
void save_homography_file(const Homography& h, const std::filesystem::path& path);

// Oxford affine-covariant layout: img1..img6 (.ppm/.pgm/.png) plus H1to2p..H1to6p.
struct OxfordSequence {
  std::string name;
  std::array<std::filesystem::path, 6> images;
  std::map<int, Homography> homographies;  // n -> H(1 -> n), n in 2..6
};

// Throws IoError(MissingFile) listing every missing file in one message.
OxfordSequence load_sequence(const std::filesystem::path& dir);

struct CorpusSplit {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> val;
  uint64_t seed = 0;
};

// Seeded shuffle, then the first floor(fraction * N) samples train.
CorpusSplit split_corpus(std::vector<LabeledSample> samples, double train_fraction, uint64_t seed);

}  // namespace deepdetect
