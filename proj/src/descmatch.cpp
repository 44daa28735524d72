#include "deepdetect/descmatch.hpp"

#include "deepdetect/errors.hpp"
#include "deepdetect/imgproc.hpp"
#include "deepdetect/random.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <charconv>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace deepdetect {

namespace {

constexpr int kGrid = 16;
constexpr int kCells = 4;
constexpr int kBins = 8;
constexpr int kOrientBins = 36;
constexpr double kClamp = 0.2;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_bounds(const GrayImage& img, const KeypointList& kps) {
  const double w = width_of(img), h = height_of(img);
  for (size_t i = 0; i < kps.size(); ++i) {
    const Keypoint& k = kps[i];
    if (!(k.x >= 0 && k.x <= w - 1 && k.y >= 0 && k.y <= h - 1)) {
      throw InvalidArgument("keypoint " + std::to_string(i) + " at (" + std::to_string(k.x) + ", " +
                            std::to_string(k.y) + ") lies outside the image");
    }
  }
}

// Gradient samples of the rotated grid, in grid coordinates.
struct GradSample {
  double magnitude;
  double angle;  // [0, 2pi), relative to the grid axes
  double weight;
};

std::vector<GradSample> grid_gradients(const GrayImage& img, const Keypoint& kp, double theta) {
  const double step = 2.0 * kp.scale / kGrid;
  const double c = std::cos(theta), s = std::sin(theta);
  const double sigma = kGrid / 2.0;
  std::vector<GradSample> out;
  out.reserve(kGrid * kGrid);
  for (int j = 0; j < kGrid; ++j) {
    for (int i = 0; i < kGrid; ++i) {
      const double u = (i - 7.5) * step, v = (j - 7.5) * step;
      const double x = kp.x + c * u - s * v, y = kp.y + s * u + c * v;
      const double gu = sample_bilinear(img, x + c * step, y + s * step) - sample_bilinear(img, x - c * step, y - s * step);
      const double gv = sample_bilinear(img, x - s * step, y + c * step) - sample_bilinear(img, x + s * step, y - c * step);
      double angle = std::atan2(gv, gu);
      if (angle < 0) angle += kTwoPi;
      if (angle >= kTwoPi) angle = 0.0;
      const double di = i - 7.5, dj = j - 7.5;
      out.push_back({std::hypot(gu, gv), angle, std::exp(-(di * di + dj * dj) / (2 * sigma * sigma))});
    }
  }
  return out;
}

// Clamping at 0.2 and renormalizing once can push entries back over 0.2.
// Instead find the scale s with sum(min(s v, 0.2)^2) = 1, which is the fixed
// point of repeated clamp/renormalize. Returns 0 when fewer than 25 bins
// are non-zero and no such s exists; the caller then keeps the unit vector.
double clamp_scale(const std::array<double, 128>& unit) {
  std::array<double, 128> u = unit;
  std::sort(u.begin(), u.end(), std::greater<>());
  double rest = 0.0;
  for (double v : u) rest += v * v;
  for (size_t k = 0; k < u.size() && u[k] > 0.0; ++k) {
    const double need = 1.0 - static_cast<double>(k) * kClamp * kClamp;
    if (need <= 0.0 || rest <= 0.0) break;
    const double s = std::sqrt(need / rest);
    if (s * u[k] <= kClamp) return s;
    rest -= u[k] * u[k];
  }
  return 0.0;
}

Descriptor describe_one(const GrayImage& img, const Keypoint& kp, double theta) {
  std::array<double, 128> hist{};
  const auto samples = grid_gradients(img, kp, theta);
  for (int j = 0; j < kGrid; ++j) {
    for (int i = 0; i < kGrid; ++i) {
      const GradSample& g = samples[j * kGrid + i];
      const double m = g.magnitude * g.weight;
      if (m == 0.0) continue;
      const double cx = (i + 0.5) / kCells - 0.5, cy = (j + 0.5) / kCells - 0.5;
      const double ob = g.angle / kTwoPi * kBins;
      const int x0 = static_cast<int>(std::floor(cx)), y0 = static_cast<int>(std::floor(cy));
      const int o0 = static_cast<int>(std::floor(ob));
      const double fx = cx - x0, fy = cy - y0, fo = ob - o0;
      for (int dy = 0; dy < 2; ++dy) {
        const int yy = y0 + dy;
        if (yy < 0 || yy >= kCells) continue;
        const double wy = dy ? fy : 1 - fy;
        for (int dx = 0; dx < 2; ++dx) {
          const int xx = x0 + dx;
          if (xx < 0 || xx >= kCells) continue;
          const double wx = dx ? fx : 1 - fx;
          for (int d_o = 0; d_o < 2; ++d_o) {
            const int oo = (o0 + d_o) % kBins;
            const double wo = d_o ? fo : 1 - fo;
            hist[(yy * kCells + xx) * kBins + oo] += m * wx * wy * wo;
          }
        }
      }
    }
  }
  Descriptor d;
  double norm = 0.0;
  for (double v : hist) norm += v * v;
  norm = std::sqrt(norm);
  if (norm < 1e-12) {
    d.degenerate = true;
    return d;
  }
  for (double& v : hist) v /= norm;
  const double s = clamp_scale(hist);
  for (size_t k = 0; k < hist.size(); ++k) d.values[k] = static_cast<float>(s > 0.0 ? std::min(hist[k] * s, kClamp) : hist[k]);
  return d;
}

bool nearly_collinear(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  const Eigen::Vector2d u = b - a, v = c - a;
  const double cross = std::abs(u.x() * v.y() - u.y() * v.x());
  return cross <= 1e-9 * u.norm() * v.norm() || u.norm() < 1e-12 || v.norm() < 1e-12;
}

bool degenerate_sample(const std::array<Eigen::Vector2d, 4>& p) {
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      for (int k = j + 1; k < 4; ++k)
        if (nearly_collinear(p[i], p[j], p[k])) return true;
  return false;
}

Eigen::Matrix3d normalizer(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  double spread = 0.0;
  for (const auto& p : pts) spread += (p - mean).norm();
  spread /= static_cast<double>(pts.size());
  if (spread < 1e-12) throw InvalidArgument("DLT: all points coincide");
  const double s = std::sqrt(2.0) / spread;
  Eigen::Matrix3d t;
  t << s, 0, -s * mean.x(), 0, s, -s * mean.y(), 0, 0, 1;
  return t;
}

bool project_safely(const Homography& h, const Eigen::Vector2d& p, Eigen::Vector2d& out) {
  try {
    out = project_point(h, p);
    return std::isfinite(out.x()) && std::isfinite(out.y());
  } catch (const PointAtInfinity&) {
    return false;
  }
}

Eigen::Vector2d point_of(const Keypoint& k) { return {k.x, k.y}; }

void check_match_indices(const MatchList& matches, size_t na, size_t nb) {
  for (size_t i = 0; i < matches.size(); ++i) {
    const MatchPair& m = matches[i];
    if (m.index_a < 0 || static_cast<size_t>(m.index_a) >= na || m.index_b < 0 ||
        static_cast<size_t>(m.index_b) >= nb) {
      throw InvalidArgument("match " + std::to_string(i) + " (" + std::to_string(m.index_a) + ", " +
                            std::to_string(m.index_b) + ") indexes outside the keypoint lists");
    }
  }
}

template <typename T>
T parse_number(const std::string& tok, const std::string& line) {
  T v{};
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) {
    throw ParseError(ParseErrorKind::NonNumeric, "matches: bad number '" + tok + "' in '" + line + "'");
  }
  return v;
}

}  // namespace

double dominant_orientation(const GrayImage& img, const Keypoint& kp) {
  std::array<double, kOrientBins> hist{};
  for (const GradSample& g : grid_gradients(img, kp, 0.0)) {
    int bin = static_cast<int>(g.angle / kTwoPi * kOrientBins);
    hist[std::min(bin, kOrientBins - 1)] += g.magnitude * g.weight;
  }
  int peak = 0;
  for (int b = 1; b < kOrientBins; ++b)
    if (hist[b] > hist[peak]) peak = b;
  if (hist[peak] <= 0.0) return 0.0;
  const double l = hist[(peak + kOrientBins - 1) % kOrientBins], r = hist[(peak + 1) % kOrientBins];
  const double denom = l - 2 * hist[peak] + r;
  const double offset = denom != 0.0 ? 0.5 * (l - r) / denom : 0.0;
  double theta = (peak + 0.5 + offset) / kOrientBins * kTwoPi;
  if (theta < 0) theta += kTwoPi;
  if (theta >= kTwoPi) theta -= kTwoPi;
  return theta;
}

DescriptorList sift_describe(const GrayImage& img, const KeypointList& kps, bool oriented) {
  if (kps.empty()) return {};
  check_bounds(img, kps);
  DescriptorList out;
  out.reserve(kps.size());
  for (const Keypoint& kp : kps) {
    if (!(kp.scale > 0)) throw InvalidArgument("keypoint scale must be positive");
    out.push_back(describe_one(img, kp, oriented ? dominant_orientation(img, kp) : 0.0));
  }
  return out;
}

std::vector<BriefPair> brief_pattern(uint64_t seed) {
  Rng rng(seed);
  std::vector<BriefPair> out;
  out.reserve(256);
  auto coord = [&rng] { return static_cast<int>(rng.below(31)) - 15; };
  while (out.size() < 256) {
    BriefPair p{coord(), coord(), coord(), coord()};
    if (p.px == p.qx && p.py == p.qy) continue;
    out.push_back(p);
  }
  return out;
}

DescriptorList brief_describe(const GrayImage& img, const KeypointList& kps, uint64_t seed) {
  if (kps.empty()) return {};
  check_bounds(img, kps);
  const GrayImage smooth = gaussian_blur(img, 2.0);
  const auto pattern = brief_pattern(seed);
  const int w = width_of(img), h = height_of(img);
  DescriptorList out;
  out.reserve(kps.size());
  for (const Keypoint& kp : kps) {
    const int cx = static_cast<int>(std::lround(kp.x)), cy = static_cast<int>(std::lround(kp.y));
    Descriptor d;
    d.kind = DescriptorKind::Binary256;
    for (size_t i = 0; i < pattern.size(); ++i) {
      const BriefPair& p = pattern[i];
      const float a = smooth(reflect101(cy + p.py, h), reflect101(cx + p.px, w));
      const float b = smooth(reflect101(cy + p.qy, h), reflect101(cx + p.qx, w));
      d.bits[i] = a > b;
    }
    out.push_back(d);
  }
  return out;
}

double descriptor_distance(const Descriptor& a, const Descriptor& b) {
  if (a.kind != b.kind) throw InvalidArgument("descriptor kinds differ");
  if (a.kind == DescriptorKind::Binary256) return static_cast<double>((a.bits ^ b.bits).count());
  double s = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    const double d = static_cast<double>(a.values[i]) - b.values[i];
    s += d * d;
  }
  return std::sqrt(s);
}

MatchList nndr_match(const DescriptorList& a, const DescriptorList& b, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw InvalidArgument("NNDR ratio must lie in (0, 1]");
  if (a.empty() || b.empty()) return {};
  const DescriptorKind kind = a.front().kind;
  for (const DescriptorList* set : {&a, &b})
    for (const Descriptor& d : *set)
      if (d.kind != kind) throw InvalidArgument("descriptor sets mix kinds");

  // Costs are squared L2 (monotone in L2) or Hamming counts; a float scan
  // stops once its partial sum can no longer beat the runner-up.
  const bool binary = kind == DescriptorKind::Binary256;
  auto cost = [binary](const Descriptor& x, const Descriptor& y, double bound) {
    if (binary) return static_cast<double>((x.bits ^ y.bits).count());
    double s = 0.0;
    for (size_t k = 0; k < x.values.size(); k += 16) {
      for (size_t t = k; t < k + 16; ++t) {
        const double d = static_cast<double>(x.values[t]) - y.values[t];
        s += d * d;
      }
      if (s >= bound) break;
    }
    return s;
  };
  auto to_distance = [binary](double c) { return binary ? c : std::sqrt(c); };

  MatchList out;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].degenerate) continue;
    double c1 = std::numeric_limits<double>::infinity(), c2 = c1;
    int best = -1;
    for (size_t j = 0; j < b.size(); ++j) {
      if (b[j].degenerate) continue;
      const double c = cost(a[i], b[j], c2);
      if (c < c1) {
        c2 = c1;
        c1 = c;
        best = static_cast<int>(j);
      } else if (c < c2) {
        c2 = c;
      }
    }
    if (best < 0) continue;
    const double d1 = to_distance(c1), d2 = to_distance(c2);
    double r = 0.0;
    if (std::isfinite(d2)) {
      r = d2 > 0.0 ? d1 / d2 : 1.0;
      if (!(r < ratio)) continue;
    }
    out.push_back({static_cast<int>(i), best, static_cast<float>(d1), static_cast<float>(r)});
  }
  return out;
}

MatchList cross_check(const MatchList& matches, const DescriptorList& a, const DescriptorList& b) {
  check_match_indices(matches, a.size(), b.size());
  std::map<int, int> back;  // b index -> nearest a
  MatchList out;
  for (const MatchPair& m : matches) {
    auto it = back.find(m.index_b);
    if (it == back.end()) {
      double best = std::numeric_limits<double>::infinity();
      int arg = -1;
      for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].degenerate) continue;
        const double d = descriptor_distance(b[m.index_b], a[i]);
        if (d < best) {
          best = d;
          arg = static_cast<int>(i);
        }
      }
      it = back.emplace(m.index_b, arg).first;
    }
    if (it->second == m.index_a) out.push_back(m);
  }
  return out;
}

int count_correct(const MatchList& matches, const KeypointList& kps_a, const KeypointList& kps_b, const Homography& h,
                  double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  check_match_indices(matches, kps_a.size(), kps_b.size());
  int n = 0;
  for (const MatchPair& m : matches) {
    Eigen::Vector2d p;
    if (project_safely(h, point_of(kps_a[m.index_a]), p) && (p - point_of(kps_b[m.index_b])).norm() < eps) ++n;
  }
  return n;
}

Homography fit_homography_dlt(const std::vector<Eigen::Vector2d>& src, const std::vector<Eigen::Vector2d>& dst) {
  if (src.size() != dst.size()) throw InvalidArgument("DLT: point lists differ in length");
  if (src.size() < 4) throw InsufficientData("DLT needs at least 4 correspondences, got " + std::to_string(src.size()));
  const Eigen::Matrix3d ts = normalizer(src), td = normalizer(dst);
  const Eigen::Index n = static_cast<Eigen::Index>(src.size());
  Eigen::MatrixXd a(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d p = ts * src[i].homogeneous();
    const Eigen::Vector3d q = td * dst[i].homogeneous();
    const double x = p.x(), y = p.y(), u = q.x(), v = q.y();
    a.row(2 * i) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    a.row(2 * i + 1) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(7) <= 1e-12 * sv(0)) throw InvalidArgument("DLT: degenerate point configuration");
  const Eigen::VectorXd hv = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << hv(0), hv(1), hv(2), hv(3), hv(4), hv(5), hv(6), hv(7), hv(8);
  return Homography(td.inverse() * hn * ts);
}

RansacResult ransac_homography(const KeypointList& kps_a, const KeypointList& kps_b, const MatchList& matches,
                               int iters, double inlier_eps, uint64_t seed) {
  if (matches.size() < 4) {
    throw InsufficientData("RANSAC needs at least 4 matches, got " + std::to_string(matches.size()));
  }
  if (iters < 1) throw InvalidArgument("RANSAC iterations must be >= 1");
  if (!(inlier_eps > 0.0)) throw InvalidArgument("inlier threshold must be positive");
  check_match_indices(matches, kps_a.size(), kps_b.size());

  std::vector<Eigen::Vector2d> src, dst;
  for (const MatchPair& m : matches) {
    src.push_back(point_of(kps_a[m.index_a]));
    dst.push_back(point_of(kps_b[m.index_b]));
  }
  auto score = [&](const Homography& h, std::vector<bool>& flags) {
    flags.assign(matches.size(), false);
    int n = 0;
    for (size_t i = 0; i < matches.size(); ++i) {
      Eigen::Vector2d p;
      if (project_safely(h, src[i], p) && (p - dst[i]).norm() < inlier_eps) {
        flags[i] = true;
        ++n;
      }
    }
    return n;
  };

  Rng rng(seed);
  RansacResult best;
  best.n_inliers = -1;
  std::vector<bool> flags;
  for (int it = 0; it < iters; ++it) {
    std::array<size_t, 4> pick{};
    for (int k = 0; k < 4; ++k) {
      size_t c;
      do {
        c = rng.below(matches.size());
      } while (std::find(pick.begin(), pick.begin() + k, c) != pick.begin() + k);
      pick[k] = c;
    }
    std::array<Eigen::Vector2d, 4> ps, pd;
    for (int k = 0; k < 4; ++k) {
      ps[k] = src[pick[k]];
      pd[k] = dst[pick[k]];
    }
    if (degenerate_sample(ps) || degenerate_sample(pd)) continue;
    Homography h;
    try {
      h = fit_homography_dlt({ps.begin(), ps.end()}, {pd.begin(), pd.end()});
    } catch (const InvalidArgument&) {
      continue;
    }
    const int n = score(h, flags);
    if (n > best.n_inliers) {
      best.h = h;
      best.inliers = flags;
      best.n_inliers = n;
    }
  }
  best.iterations = iters;
  if (best.n_inliers < 0) throw InsufficientData("RANSAC found no non-degenerate sample");

  if (best.n_inliers >= 4) {
    std::vector<Eigen::Vector2d> is, id;
    for (size_t i = 0; i < matches.size(); ++i)
      if (best.inliers[i]) {
        is.push_back(src[i]);
        id.push_back(dst[i]);
      }
    try {
      best.h = fit_homography_dlt(is, id);
    } catch (const InvalidArgument&) {
      // keep the minimal-sample model
    }
  }
  best.n_inliers = score(best.h, best.inliers);
  return best;
}

void write_matches(std::ostream& out, const MatchList& matches) {
  out << "ia,ib,distance,ratio\n";
  char buf[96];
  for (const MatchPair& m : matches) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.9g,%.9g\n", m.index_a, m.index_b, m.distance, m.ratio);
    out << buf;
  }
}

MatchList read_matches(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "ia,ib,distance,ratio") {
    throw ParseError(ParseErrorKind::TokenCount, "matches: missing header 'ia,ib,distance,ratio'");
  }
  MatchList out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> tok;
    std::stringstream ss(line);
    for (std::string t; std::getline(ss, t, ',');) tok.push_back(t);
    if (tok.size() != 4) throw ParseError(ParseErrorKind::TokenCount, "matches: expected 4 fields in '" + line + "'");
    out.push_back({parse_number<int>(tok[0], line), parse_number<int>(tok[1], line), parse_number<float>(tok[2], line),
                   parse_number<float>(tok[3], line)});
  }
  return out;
}

void save_matches(const std::filesystem::path& path, const MatchList& matches) {
  std::ofstream out(path);
  if (!out) throw IoError(IoErrorKind::WriteFailed, "cannot open " + path.string() + " for writing");
  write_matches(out, matches);
  if (!out) throw IoError(IoErrorKind::WriteFailed, "failed writing " + path.string());
}

MatchList load_matches(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoErrorKind::MissingFile, "cannot open " + path.string());
  return read_matches(in);
}

}  // namespace deepdetect
