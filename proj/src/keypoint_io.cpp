#include "deepdetect/keypoint_io.hpp"

#include "deepdetect/errors.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace deepdetect {

namespace {

// Six decimals when that reads back to the same float, otherwise the shortest
// fixed-point text that does (tiny scores, large subpixel coordinates).
void put_fixed(std::ostream& out, float v) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  if (std::strtof(buf, nullptr) != v) {
    const auto r = std::to_chars(buf, buf + sizeof buf - 1, v, std::chars_format::fixed);
    *r.ptr = '\0';
  }
  out << buf;
}

}  // namespace

void write_keypoints_csv(std::ostream& out, const KeypointList& kps) {
  out << "x,y,score,scale\n";
  for (const Keypoint& k : kps) {
    put_fixed(out, k.x);
    out << ',';
    put_fixed(out, k.y);
    out << ',';
    put_fixed(out, k.score);
    out << ',';
    put_fixed(out, k.scale);
    out << '\n';
  }
}

void save_keypoints_csv(const KeypointList& kps, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(IoErrorKind::WriteFailed, "cannot write " + path.string());
  write_keypoints_csv(out, kps);
}

KeypointList read_keypoints_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "x,y,score,scale") {
    throw IoError(IoErrorKind::MalformedHeader, "keypoint CSV must start with x,y,score,scale");
  }
  KeypointList kps;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Keypoint k;
    char tail = 0;
    if (std::sscanf(line.c_str(), "%f,%f,%f,%f%c", &k.x, &k.y, &k.score, &k.scale, &tail) != 4) {
      throw IoError(IoErrorKind::MalformedHeader, "bad keypoint row: " + line);
    }
    kps.push_back(k);
  }
  return kps;
}

KeypointList load_keypoints_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoErrorKind::MissingFile, "cannot open " + path.string());
  return read_keypoints_csv(in);
}

}  // namespace deepdetect
