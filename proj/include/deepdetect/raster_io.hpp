#pragma once

#include "deepdetect/image.hpp"

#include <filesystem>

namespace deepdetect {

// Binary PPM (P6) / PGM (P5), maxval 255. A P5 file is loaded with its gray
// value replicated into R, G and B. Errors are IoError with kinds MissingFile,
// MalformedHeader (bad header or truncated pixel data) and UnsupportedFormat.
RgbImage load_image(const std::filesystem::path& path);
void save_image(const RgbImage& img, const std::filesystem::path& path);

// Gray raster as P5 with values rounded and clamped to [0, 255].
void save_gray(const GrayImage& img, const std::filesystem::path& path);
GrayImage load_gray(const std::filesystem::path& path);

// Masks are P5 rasters holding {0, 255}; any nonzero byte reads back as 1.
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);
BinaryMask load_mask(const std::filesystem::path& path);

}  // namespace deepdetect
