#pragma once

#include "deepdetect/image.hpp"

#include <filesystem>
#include <iosfwd>

namespace deepdetect {

// CSV with header `x,y,score,scale`, fixed-point with 6 decimals.
void write_keypoints_csv(std::ostream& out, const KeypointList& kps);
void save_keypoints_csv(const KeypointList& kps, const std::filesystem::path& path);
KeypointList read_keypoints_csv(std::istream& in);
KeypointList load_keypoints_csv(const std::filesystem::path& path);

}  // namespace deepdetect
