#include "deepdetect/raster_io.hpp"

#include "deepdetect/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

namespace deepdetect {

namespace {

struct RawRaster {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<uint8_t> bytes;
};

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoErrorKind::MissingFile, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Reads one whitespace-delimited header token, skipping '#' comments.
bool next_token(const std::string& buf, size_t& pos, std::string& token) {
  token.clear();
  while (pos < buf.size()) {
    const char c = buf[pos];
    if (c == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) token += buf[pos++];
  return !token.empty();
}

int header_int(const std::string& buf, size_t& pos, const std::filesystem::path& path) {
  std::string tok;
  if (!next_token(buf, pos, tok) || !std::all_of(tok.begin(), tok.end(), ::isdigit) || tok.size() > 9) {
    throw IoError(IoErrorKind::MalformedHeader, "malformed header in " + path.string());
  }
  return std::stoi(tok);
}

RawRaster read_raster(const std::filesystem::path& path) {
  const std::string buf = read_all(path);
  if (buf.size() < 2) throw IoError(IoErrorKind::MalformedHeader, "truncated header in " + path.string());
  if (buf[0] != 'P') throw IoError(IoErrorKind::UnsupportedFormat, "not a PGM/PPM file: " + path.string());
  RawRaster r;
  if (buf[1] == '5') {
    r.channels = 1;
  } else if (buf[1] == '6') {
    r.channels = 3;
  } else {
    throw IoError(IoErrorKind::UnsupportedFormat, "only binary P5/P6 rasters are supported: " + path.string());
  }
  size_t pos = 2;
  r.width = header_int(buf, pos, path);
  r.height = header_int(buf, pos, path);
  const int maxval = header_int(buf, pos, path);
  if (r.width < 1 || r.height < 1) throw IoError(IoErrorKind::MalformedHeader, "empty raster in " + path.string());
  if (maxval != 255) throw IoError(IoErrorKind::UnsupportedFormat, "maxval must be 255 in " + path.string());
  if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos]))) {
    throw IoError(IoErrorKind::MalformedHeader, "truncated header in " + path.string());
  }
  ++pos;
  const size_t n = static_cast<size_t>(r.width) * r.height * r.channels;
  if (buf.size() - pos < n) throw IoError(IoErrorKind::MalformedHeader, "truncated pixel data in " + path.string());
  r.bytes.assign(buf.begin() + static_cast<std::ptrdiff_t>(pos), buf.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return r;
}

void write_raster(const std::filesystem::path& path, char magic, int w, int h, const uint8_t* data, size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoErrorKind::WriteFailed, "cannot write " + path.string());
  out << 'P' << magic << ' ' << w << ' ' << h << " 255\n";
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw IoError(IoErrorKind::WriteFailed, "write failed for " + path.string());
}

}  // namespace

RgbImage load_image(const std::filesystem::path& path) {
  RawRaster r = read_raster(path);
  RgbImage img(r.width, r.height);
  if (r.channels == 3) {
    img.data = std::move(r.bytes);
  } else {
    for (size_t i = 0; i < r.bytes.size(); ++i)
      for (int c = 0; c < 3; ++c) img.data[i * 3 + c] = r.bytes[i];
  }
  return img;
}

void save_image(const RgbImage& img, const std::filesystem::path& path) {
  write_raster(path, '6', img.width, img.height, img.data.data(), img.data.size());
}

void save_gray(const GrayImage& img, const std::filesystem::path& path) {
  std::vector<uint8_t> bytes(img.size());
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    bytes[i] = static_cast<uint8_t>(std::clamp(std::lround(img.data()[i]), 0L, 255L));
  }
  write_raster(path, '5', width_of(img), height_of(img), bytes.data(), bytes.size());
}

GrayImage load_gray(const std::filesystem::path& path) {
  const RawRaster r = read_raster(path);
  GrayImage out(r.height, r.width);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (r.channels == 1) {
      out.data()[i] = r.bytes[i];
    } else {
      out.data()[i] = static_cast<float>(0.299 * r.bytes[3 * i] + 0.587 * r.bytes[3 * i + 1] + 0.114 * r.bytes[3 * i + 2]);
    }
  }
  return out;
}

void save_mask(const BinaryMask& mask, const std::filesystem::path& path) {
  std::vector<uint8_t> bytes(mask.size());
  for (Eigen::Index i = 0; i < mask.size(); ++i) bytes[i] = mask.data()[i] ? 255 : 0;
  write_raster(path, '5', width_of(mask), height_of(mask), bytes.data(), bytes.size());
}

BinaryMask load_mask(const std::filesystem::path& path) {
  const RawRaster r = read_raster(path);
  if (r.channels != 1) throw IoError(IoErrorKind::UnsupportedFormat, "mask must be a P5 raster: " + path.string());
  BinaryMask out(r.height, r.width);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = r.bytes[i] ? 1 : 0;
  return out;
}

}  // namespace deepdetect
