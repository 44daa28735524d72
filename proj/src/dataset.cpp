#include "deepdetect/dataset.hpp"

#include "deepdetect/errors.hpp"
#include "deepdetect/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace deepdetect {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoErrorKind::MissingFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path relative_to(const fs::path& p, const fs::path& base) {
  const fs::path rel = p.lexically_proximate(base);
  return rel.empty() ? p : rel;
}

}  // namespace

void write_manifest(const Manifest& manifest, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(IoErrorKind::WriteFailed, "cannot write " + path.string());
  const fs::path base = path.parent_path();
  for (const LabeledSample& s : manifest.samples) {
    json j;
    j["image"] = relative_to(s.image_path, base).generic_string();
    j["mask"] = relative_to(s.mask_path, base).generic_string();
    j["profile"] = std::string(profile_label(s.profile_used));
    j["degraded"] = s.degraded;
    j["seed"] = s.seed;
    out << j.dump() << '\n';
  }
  if (manifest.skipped > 0) {
    json j;
    j["skipped"] = manifest.skipped;
    j["warnings"] = manifest.warnings;
    out << j.dump() << '\n';
  }
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoErrorKind::MissingFile, "cannot open manifest " + path.string());
  const fs::path base = path.parent_path();
  Manifest m;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError(IoErrorKind::MalformedHeader, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (j.contains("skipped")) {
      m.skipped = j.at("skipped").get<int>();
      if (j.contains("warnings")) m.warnings = j.at("warnings").get<std::vector<std::string>>();
      continue;
    }
    try {
      LabeledSample s;
      const fs::path image = j.at("image").get<std::string>();
      const fs::path mask = j.at("mask").get<std::string>();
      s.image_path = image.is_absolute() ? image : base / image;
      s.mask_path = mask.is_absolute() ? mask : base / mask;
      const auto profile = parse_profile_name(j.at("profile").get<std::string>());
      if (!profile) throw IoError(IoErrorKind::MalformedHeader, "unknown profile");
      s.profile_used = *profile;
      s.degraded = j.at("degraded").get<bool>();
      s.seed = j.value("seed", uint64_t{0});
      m.samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw IoError(IoErrorKind::MalformedHeader, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return m;
}

Homography parse_homography(std::string_view text) {
  std::vector<std::string> tokens;
  std::istringstream ss{std::string(text)};
  for (std::string tok; ss >> tok;) tokens.push_back(tok);
  if (tokens.size() != 9) {
    throw ParseError(ParseErrorKind::TokenCount, "homography needs 9 numbers, got " + std::to_string(tokens.size()));
  }
  std::array<double, 9> v{};
  for (size_t i = 0; i < 9; ++i) {
    const std::string& t = tokens[i];
    const char* first = t.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v[i]);
    if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v[i])) {
      throw ParseError(ParseErrorKind::NonNumeric, "non-numeric homography token '" + t + "'");
    }
  }
  try {
    return Homography::from_row_major(v);
  } catch (const InvalidArgument& e) {
    throw ParseError(ParseErrorKind::SingularMatrix, e.what());
  }
}

Homography parse_homography_file(const fs::path& path) {
  try {
    return parse_homography(read_text(path));
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), path.string() + ": " + e.what());
  }
}

std::string format_homography(const Homography& h) {
  const auto v = h.row_major();
  std::string out;
  char buf[64];
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", v[r * 3 + c]);
      out += buf;
      out += c < 2 ? ' ' : '\n';
    }
  }
  return out;
}

void save_homography_file(const Homography& h, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(IoErrorKind::WriteFailed, "cannot write " + path.string());
  out << format_homography(h);
}

OxfordSequence load_sequence(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(IoErrorKind::MissingFile, "sequence directory not found: " + dir.string());
  OxfordSequence seq;
  seq.name = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
  std::vector<std::string> missing;
  for (int i = 1; i <= 6; ++i) {
    const std::string stem = "img" + std::to_string(i);
    for (const char* ext : {".ppm", ".pgm", ".png"}) {
      if (fs::is_regular_file(dir / (stem + ext))) {
        seq.images[i - 1] = dir / (stem + ext);
        break;
      }
    }
    if (seq.images[i - 1].empty()) missing.push_back(stem);
  }
  for (int n = 2; n <= 6; ++n) {
    const std::string name = "H1to" + std::to_string(n) + "p";
    if (!fs::is_regular_file(dir / name)) missing.push_back(name);
  }
  if (!missing.empty()) {
    std::string msg = "incomplete sequence " + dir.string() + ", missing:";
    for (const auto& m : missing) msg += " " + m;
    throw IoError(IoErrorKind::MissingFile, msg);
  }
  for (int n = 2; n <= 6; ++n) {
    seq.homographies.emplace(n, parse_homography_file(dir / ("H1to" + std::to_string(n) + "p")));
  }
  return seq;
}

CorpusSplit split_corpus(std::vector<LabeledSample> samples, double train_fraction, uint64_t seed) {
  if (samples.size() < 2) throw InvalidArgument("split needs at least 2 samples");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidArgument("train fraction must lie in (0, 1)");
  Rng rng(seed);
  rng.shuffle(samples);
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  auto n_train = static_cast<std::ptrdiff_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
  n_train = std::clamp<std::ptrdiff_t>(n_train, 1, n - 1);
  CorpusSplit split;
  split.seed = seed;
  split.train.assign(samples.begin(), samples.begin() + n_train);
  split.val.assign(samples.begin() + n_train, samples.end());
  return split;
}

}  // namespace deepdetect
