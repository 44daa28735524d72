#pragma once

#include "deepdetect/fusion.hpp"
#include "deepdetect/train.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace deepdetect {

// Bad flags, bad config files, config values out of range. Exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MatchConfig {
  double ratio = 0.8;
  double eps = 1.0;
  bool oriented = false;
  bool cross_check = false;
  int ransac_iters = 2000;
};

struct IoConfig {
  std::filesystem::path output_dir = ".";
};

// JSON config file; every section and key is optional, unknown keys are
// rejected. "seed" seeds every command; "train.seed" overrides it for training.
struct AppConfig {
  ProfileSet profiles;
  TrainConfig train;
  MatchConfig match;
  IoConfig io;
  uint64_t seed = 0;

  // Throws UsageError.
  void validate() const;
};

AppConfig parse_app_config(const std::string& json_text);
AppConfig load_app_config(const std::filesystem::path& path);

// args excludes the program name. Returns the process exit status:
// 0 success, 1 runtime or data error, 2 usage or config error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace deepdetect
