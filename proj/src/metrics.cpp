#include "deepdetect/metrics.hpp"

#include "deepdetect/errors.hpp"
#include "deepdetect/imgproc.hpp"
#include "deepdetect/raster_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace deepdetect {

using nlohmann::json;

namespace {

constexpr int kUnreached = std::numeric_limits<int>::max();

// Hopcroft-Karp with an explicit DFS stack.
int max_bipartite_matching(int n_left, int n_right, const std::vector<std::vector<int>>& adj) {
  std::vector<int> match_l(n_left, -1), match_r(n_right, -1), dist(n_left);
  int matched = 0;
  while (true) {
    std::queue<int> q;
    for (int l = 0; l < n_left; ++l) {
      dist[l] = match_l[l] < 0 ? 0 : kUnreached;
      if (match_l[l] < 0) q.push(l);
    }
    bool found = false;
    while (!q.empty()) {
      const int l = q.front();
      q.pop();
      for (int r : adj[l]) {
        const int next = match_r[r];
        if (next < 0) {
          found = true;
        } else if (dist[next] == kUnreached) {
          dist[next] = dist[l] + 1;
          q.push(next);
        }
      }
    }
    if (!found) break;

    std::vector<size_t> cursor(n_left, 0);
    std::vector<int> stack;
    for (int root = 0; root < n_left; ++root) {
      if (match_l[root] >= 0) continue;
      stack.assign(1, root);
      while (!stack.empty()) {
        const int u = stack.back();
        if (cursor[u] == adj[u].size()) {
          dist[u] = kUnreached;
          stack.pop_back();
          continue;
        }
        const int r = adj[u][cursor[u]];
        const int w = match_r[r];
        if (w < 0) {
          for (int v : stack) {
            const int rv = adj[v][cursor[v]];
            match_r[rv] = v;
            match_l[v] = rv;
          }
          ++matched;
          break;
        }
        if (dist[w] == dist[u] + 1)
          stack.push_back(w);
        else
          ++cursor[u];
      }
    }
  }
  return matched;
}

bool inside(const Eigen::Vector2d& p, ImageDims d) {
  return p.x() >= 0 && p.y() >= 0 && p.x() <= d.width - 1 && p.y() <= d.height - 1;
}

bool project_into(const Homography& h, const Keypoint& k, ImageDims target, Eigen::Vector2d& out) {
  try {
    out = project_point(h, Eigen::Vector2d(k.x, k.y));
  } catch (const PointAtInfinity&) {
    return false;
  }
  return std::isfinite(out.x()) && std::isfinite(out.y()) && inside(out, target);
}

void check_dims(ImageDims d) {
  if (d.width < 1 || d.height < 1) throw InvalidArgument("image dimensions must be positive");
}

void check_in_bounds(const KeypointList& kps, ImageDims d, const char* which) {
  for (const Keypoint& k : kps) {
    if (!inside(Eigen::Vector2d(k.x, k.y), d)) {
      throw InvalidArgument(std::string("keypoint of ") + which + " at (" + std::to_string(k.x) + ", " +
                            std::to_string(k.y) + ") outside its image");
    }
  }
}

[[noreturn]] void rethrow_labeled(const std::string& label) {
  try {
    throw;
  } catch (const IoError& e) {
    throw IoError(e.kind(), label + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), label + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(label + ": " + e.what());
  } catch (const PointAtInfinity& e) {
    throw PointAtInfinity(label + ": " + e.what());
  } catch (const InsufficientData& e) {
    throw InsufficientData(label + ": " + e.what());
  } catch (const UndefinedRatio& e) {
    throw UndefinedRatio(label + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(label + ": " + e.what());
  }
}

struct Features {
  ImageDims dims;
  KeypointList kps;
  DescriptorList desc;
};

Features extract(const RgbImage& img, const DetectorSpec& detector, const DescriptorSpec& descriptor) {
  Features f;
  f.dims = {img.width, img.height};
  f.kps = run_detector(detector, img);
  f.desc = describe(descriptor, detector, rgb_to_gray(img), f.kps);
  return f;
}

PairRecord compare(const Features& a, const Features& b, const Homography& h, const EvalSettings& settings,
                   const std::string& id) {
  PairRecord r;
  r.pair = id;
  r.n_a = static_cast<int>(a.kps.size());
  r.n_b = static_cast<int>(b.kps.size());
  r.density_a = keypoint_density(r.n_a, a.dims.width, a.dims.height);
  r.density_b = keypoint_density(r.n_b, b.dims.width, b.dims.height);
  r.repeatability = repeatability(a.kps, b.kps, h, a.dims, b.dims, settings.eps, settings.presence_only);
  MatchList matches = nndr_match(a.desc, b.desc, settings.ratio);
  if (settings.cross_check) matches = cross_check(matches, a.desc, b.desc);
  r.n_matches = static_cast<int>(matches.size());
  r.n_correct = count_correct(matches, a.kps, b.kps, h, settings.eps);
  return r;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double keypoint_density(long long n, int width, int height) {
  if (width <= 0 || height <= 0) throw InvalidArgument("density: image area must be positive");
  if (n < 0) throw InvalidArgument("density: keypoint count must be >= 0");
  return static_cast<double>(n) / (static_cast<double>(width) * height);
}

RepeatabilityCounts repeatability_counts(const KeypointList& kps_a, const KeypointList& kps_b, const Homography& h_ab,
                                         ImageDims dims_a, ImageDims dims_b, double eps, bool presence_only) {
  if (!(eps > 0.0)) throw InvalidArgument("repeatability: eps must be positive");
  check_dims(dims_a);
  check_dims(dims_b);
  check_in_bounds(kps_a, dims_a, "A");
  check_in_bounds(kps_b, dims_b, "B");
  const Homography h_ba = h_ab.inverse();

  std::vector<Eigen::Vector2d> pa;  // A keypoints in B's frame
  for (const Keypoint& k : kps_a) {
    Eigen::Vector2d p;
    if (project_into(h_ab, k, dims_b, p)) pa.push_back(p);
  }
  std::vector<Eigen::Vector2d> pb;
  for (const Keypoint& k : kps_b) {
    Eigen::Vector2d unused;
    if (project_into(h_ba, k, dims_a, unused)) pb.emplace_back(k.x, k.y);
  }

  RepeatabilityCounts c;
  c.n_a = static_cast<int>(pa.size());
  c.n_b = static_cast<int>(pb.size());
  if (presence_only) {
    // Literal reading: A keypoints inside the overlap over the smaller
    // total keypoint count, capped at 1.
    const size_t total = std::min(kps_a.size(), kps_b.size());
    if (total == 0) return c;
    c.n_common = static_cast<int>(std::min(pa.size(), total));
    c.value = static_cast<double>(c.n_common) / static_cast<double>(total);
    return c;
  }
  const int denom = std::min(c.n_a, c.n_b);
  if (denom == 0) return c;

  auto cell = [eps](double v) { return static_cast<int64_t>(std::floor(v / eps)); };
  auto key = [](int64_t cx, int64_t cy) { return (cx << 32) ^ (cy & 0xffffffff); };
  std::unordered_map<int64_t, std::vector<int>> grid;
  for (size_t j = 0; j < pb.size(); ++j) grid[key(cell(pb[j].x()), cell(pb[j].y()))].push_back(static_cast<int>(j));
  std::vector<std::vector<int>> adj(pa.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    const int64_t cx = cell(pa[i].x()), cy = cell(pa[i].y());
    for (int64_t dy = -1; dy <= 1; ++dy)
      for (int64_t dx = -1; dx <= 1; ++dx) {
        auto it = grid.find(key(cx + dx, cy + dy));
        if (it == grid.end()) continue;
        for (int j : it->second)
          if ((pa[i] - pb[j]).norm() <= eps) adj[i].push_back(j);
      }
    std::sort(adj[i].begin(), adj[i].end());
  }
  c.n_common = max_bipartite_matching(c.n_a, c.n_b, adj);
  c.value = static_cast<double>(c.n_common) / denom;
  return c;
}

double repeatability(const KeypointList& kps_a, const KeypointList& kps_b, const Homography& h_ab, ImageDims dims_a,
                     ImageDims dims_b, double eps, bool presence_only) {
  return repeatability_counts(kps_a, kps_b, h_ab, dims_a, dims_b, eps, presence_only).value;
}

double fkp_ratio(const KeypointList& kps, const BinaryMask& fg) {
  if (kps.empty()) throw UndefinedRatio("F-KP ratio of an empty keypoint list");
  long n_fg = 0;
  for (const Keypoint& k : kps) {
    const long x = std::lround(k.x), y = std::lround(k.y);
    if (x < 0 || y < 0 || x >= width_of(fg) || y >= height_of(fg)) {
      throw InvalidArgument("keypoint (" + std::to_string(k.x) + ", " + std::to_string(k.y) +
                            ") outside the foreground mask");
    }
    n_fg += fg(y, x) != 0;
  }
  return static_cast<double>(n_fg) / static_cast<double>(kps.size());
}

DetectorSpec DetectorSpec::classical(DetectorKind kind, ProfileName profile) {
  DetectorSpec s;
  s.kind = kind;
  s.profile = DetectorProfile::for_name(profile);
  return s;
}

DetectorSpec DetectorSpec::network(std::shared_ptr<const ModelWeights> weights, double tau,
                                   std::optional<int> working_size) {
  DetectorSpec s;
  s.deep = true;
  s.weights = std::move(weights);
  s.tau = tau;
  s.working_size = working_size;
  return s;
}

std::string DetectorSpec::label() const {
  if (deep) return "deepdetect";
  return std::string(detector_label(kind)) + "/" + std::string(profile_label(profile.name));
}

void DetectorSpec::validate() const {
  if (!deep) {
    profile.validate();
    return;
  }
  if (!weights) throw InvalidArgument("network detector without weights");
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("tau must lie in (0, 1)");
  if (working_size && *working_size < 8) throw InvalidArgument("working size must be >= 8");
}

KeypointList run_detector(const DetectorSpec& spec, const RgbImage& img) {
  spec.validate();
  if (!spec.deep) return detect(spec.kind, rgb_to_gray(img), spec.profile);
  const InferenceResult r = infer_mask(img, *spec.weights, spec.tau, spec.working_size);
  return mask_to_keypoints(r.mask, &r.prob);
}

DescriptorKind DescriptorSpec::resolve(const DetectorSpec& detector) const {
  switch (choice) {
    case DescriptorChoice::Sift: return DescriptorKind::Float128;
    case DescriptorChoice::Brief: return DescriptorKind::Binary256;
    case DescriptorChoice::Auto: break;
  }
  if (!detector.deep && (detector.kind == DetectorKind::Orb || detector.kind == DetectorKind::Brisk)) {
    return DescriptorKind::Binary256;
  }
  return DescriptorKind::Float128;
}

DescriptorList describe(const DescriptorSpec& spec, const DetectorSpec& detector, const GrayImage& gray,
                        const KeypointList& kps) {
  if (spec.resolve(detector) == DescriptorKind::Binary256) return brief_describe(gray, kps, spec.brief_seed);
  return sift_describe(gray, kps, spec.oriented);
}

void EvalSettings::validate() const {
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw InvalidArgument("NNDR ratio must lie in (0, 1]");
}

PairRecord evaluate_pair(const RgbImage& img_a, const RgbImage& img_b, const Homography& h_gt,
                         const DetectorSpec& detector, const DescriptorSpec& descriptor, const EvalSettings& settings,
                         const std::string& pair_id) {
  settings.validate();
  const char* stage = "image A";
  try {
    const Features a = extract(img_a, detector, descriptor);
    stage = "image B";
    const Features b = extract(img_b, detector, descriptor);
    stage = "scoring";
    return compare(a, b, h_gt, settings, pair_id);
  } catch (...) {
    rethrow_labeled("pair " + pair_id + " (" + stage + ")");
  }
}

void aggregate(MetricsReport& report) {
  report.avg_density = report.avg_repeatability = 0.0;
  report.total_correct = 0;
  for (const PairRecord& r : report.records) {
    report.avg_density += (r.density_a + r.density_b) / 2;
    report.avg_repeatability += r.repeatability;
    report.total_correct += r.n_correct;
  }
  if (!report.records.empty()) {
    report.avg_density /= static_cast<double>(report.records.size());
    report.avg_repeatability /= static_cast<double>(report.records.size());
  }
}

MetricsReport evaluate_sequence(const OxfordSequence& seq, const DetectorSpec& detector,
                                const DescriptorSpec& descriptor, const EvalSettings& settings) {
  settings.validate();
  detector.validate();
  for (int n = 2; n <= 6; ++n) {
    if (!seq.homographies.count(n)) {
      throw IoError(IoErrorKind::MissingFile,
                    "sequence " + seq.name + ": missing homography H1to" + std::to_string(n) + "p");
    }
  }
  MetricsReport report;
  report.sequence = seq.name;
  report.detector = detector.label();
  report.descriptor = descriptor.resolve(detector) == DescriptorKind::Binary256 ? "brief" : "sift";
  report.eps = settings.eps;
  report.ratio = settings.ratio;
  if (detector.deep) report.tau = detector.tau;
  report.presence_only = settings.presence_only;
  report.cross_check = settings.cross_check;

  Features base;
  try {
    base = extract(load_image(seq.images[0]), detector, descriptor);
  } catch (...) {
    rethrow_labeled("sequence " + seq.name + ", image 1");
  }
  for (int n = 2; n <= 6; ++n) {
    const std::string id = "1-" + std::to_string(n);
    try {
      const Features other = extract(load_image(seq.images[n - 1]), detector, descriptor);
      report.records.push_back(compare(base, other, seq.homographies.at(n), settings, id));
    } catch (...) {
      rethrow_labeled("sequence " + seq.name + ", pair " + id);
    }
  }
  aggregate(report);
  return report;
}

std::string report_to_json(const MetricsReport& report) {
  json j;
  j["sequence"] = report.sequence;
  j["detector"] = report.detector;
  j["descriptor"] = report.descriptor;
  j["settings"] = {{"eps", report.eps},
                   {"ratio", report.ratio},
                   {"tau", report.tau ? json(*report.tau) : json(nullptr)},
                   {"presence_only", report.presence_only},
                   {"cross_check", report.cross_check}};
  json records = json::array();
  for (const PairRecord& r : report.records) {
    records.push_back({{"pair", r.pair},
                       {"n_a", r.n_a},
                       {"n_b", r.n_b},
                       {"density_a", r.density_a},
                       {"density_b", r.density_b},
                       {"repeatability", r.repeatability},
                       {"n_matches", r.n_matches},
                       {"n_correct", r.n_correct}});
  }
  j["records"] = records;
  j["aggregates"] = {{"avg_density", report.avg_density},
                     {"avg_repeatability", report.avg_repeatability},
                     {"total_correct", report.total_correct}};
  return j.dump(2);
}

MetricsReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    MetricsReport r;
    r.sequence = j.at("sequence").get<std::string>();
    r.detector = j.at("detector").get<std::string>();
    r.descriptor = j.at("descriptor").get<std::string>();
    const json& s = j.at("settings");
    r.eps = s.at("eps").get<double>();
    r.ratio = s.at("ratio").get<double>();
    if (!s.at("tau").is_null()) r.tau = s.at("tau").get<double>();
    r.presence_only = s.at("presence_only").get<bool>();
    r.cross_check = s.at("cross_check").get<bool>();
    for (const json& x : j.at("records")) {
      PairRecord p;
      p.pair = x.at("pair").get<std::string>();
      p.n_a = x.at("n_a").get<int>();
      p.n_b = x.at("n_b").get<int>();
      p.density_a = x.at("density_a").get<double>();
      p.density_b = x.at("density_b").get<double>();
      p.repeatability = x.at("repeatability").get<double>();
      p.n_matches = x.at("n_matches").get<int>();
      p.n_correct = x.at("n_correct").get<int>();
      r.records.push_back(p);
    }
    const json& a = j.at("aggregates");
    r.avg_density = a.at("avg_density").get<double>();
    r.avg_repeatability = a.at("avg_repeatability").get<double>();
    r.total_correct = a.at("total_correct").get<long long>();
    return r;
  } catch (const json::exception& e) {
    throw IoError(IoErrorKind::MalformedHeader, std::string("metrics report: ") + e.what());
  }
}

void save_report_json(const MetricsReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(IoErrorKind::WriteFailed, "cannot open " + path.string() + " for writing");
  out << report_to_json(report) << '\n';
  if (!out) throw IoError(IoErrorKind::WriteFailed, "failed writing " + path.string());
}

MetricsReport load_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoErrorKind::MissingFile, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return report_from_json(ss.str());
}

void write_report_csv(std::ostream& out, const MetricsReport& report) {
  out << "pair,n_a,n_b,repeatability,n_correct,density_a,density_b\n";
  for (const PairRecord& r : report.records) {
    out << r.pair << ',' << r.n_a << ',' << r.n_b << ',' << fmt17(r.repeatability) << ',' << r.n_correct << ','
        << fmt17(r.density_a) << ',' << fmt17(r.density_b) << '\n';
  }
}

void save_report_csv(const MetricsReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(IoErrorKind::WriteFailed, "cannot open " + path.string() + " for writing");
  write_report_csv(out, report);
  if (!out) throw IoError(IoErrorKind::WriteFailed, "failed writing " + path.string());
}

}  // namespace deepdetect
