#pragma once

#include "deepdetect/dataset.hpp"
#include "deepdetect/descmatch.hpp"
#include "deepdetect/detectors.hpp"
#include "deepdetect/espnet.hpp"
#include "deepdetect/homography.hpp"
#include "deepdetect/image.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace deepdetect {

// Keypoints per pixel.
double keypoint_density(long long n, int width, int height);

struct ImageDims {
  int width = 0;
  int height = 0;
};

struct RepeatabilityCounts {
  int n_a = 0;       // keypoints of A inside the common region
  int n_b = 0;       // keypoints of B inside the common region
  int n_common = 0;  // repeated keypoints
  double value = 0.0;
};

// A keypoint is in the common region when its projection (h_ab for A, the
// inverse for B) lands inside the other image. Repeated keypoints are a
// maximum one-to-one pairing of A and B keypoints with ||h_ab(a) - b|| <= eps,
// so the count is the same from either side and never exceeds min(n_a, n_b).
// value = n_common / min(n_a, n_b), 0 when that minimum is 0.
// presence_only takes the literal count instead: A keypoints inside the
// common region over min(|kps_a|, |kps_b|), capped at 1.
RepeatabilityCounts repeatability_counts(const KeypointList& kps_a, const KeypointList& kps_b, const Homography& h_ab,
                                         ImageDims dims_a, ImageDims dims_b, double eps = 1.0,
                                         bool presence_only = false);
double repeatability(const KeypointList& kps_a, const KeypointList& kps_b, const Homography& h_ab, ImageDims dims_a,
                     ImageDims dims_b, double eps = 1.0, bool presence_only = false);

// Share of keypoints whose rounded pixel is set in fg. UndefinedRatio for an
// empty list, InvalidArgument for keypoints outside the mask.
double fkp_ratio(const KeypointList& kps, const BinaryMask& fg);

// Either a classical detector with a threshold profile or the trained network.
struct DetectorSpec {
  bool deep = false;
  DetectorKind kind = DetectorKind::Harris;
  DetectorProfile profile;
  std::shared_ptr<const ModelWeights> weights;
  double tau = 0.5;
  std::optional<int> working_size;

  static DetectorSpec classical(DetectorKind kind, ProfileName profile = ProfileName::Normal);
  static DetectorSpec network(std::shared_ptr<const ModelWeights> weights, double tau = 0.5,
                              std::optional<int> working_size = {});
  std::string label() const;
  void validate() const;
};

KeypointList run_detector(const DetectorSpec& spec, const RgbImage& img);

enum class DescriptorChoice { Auto, Sift, Brief };

// Auto: BRIEF for ORB and BRISK, SIFT for everything else.
struct DescriptorSpec {
  DescriptorChoice choice = DescriptorChoice::Auto;
  bool oriented = false;
  uint64_t brief_seed = 0;

  DescriptorKind resolve(const DetectorSpec& detector) const;
};

DescriptorList describe(const DescriptorSpec& spec, const DetectorSpec& detector, const GrayImage& gray,
                        const KeypointList& kps);

struct EvalSettings {
  double eps = 1.0;
  double ratio = kDefaultNndrRatio;
  bool presence_only = false;
  bool cross_check = false;

  void validate() const;
};

struct PairRecord {
  std::string pair;  // "1-n"
  int n_a = 0;       // detected keypoints
  int n_b = 0;
  double density_a = 0.0;
  double density_b = 0.0;
  double repeatability = 0.0;
  int n_matches = 0;
  int n_correct = 0;
  bool operator==(const PairRecord&) const = default;
};

PairRecord evaluate_pair(const RgbImage& img_a, const RgbImage& img_b, const Homography& h_gt,
                         const DetectorSpec& detector, const DescriptorSpec& descriptor, const EvalSettings& settings,
                         const std::string& pair_id = "1-2");

struct MetricsReport {
  std::string sequence;
  std::string detector;
  std::string descriptor;
  double eps = 1.0;
  double ratio = kDefaultNndrRatio;
  std::optional<double> tau;
  bool presence_only = false;
  bool cross_check = false;
  std::vector<PairRecord> records;
  double avg_density = 0.0;  // mean over records of (density_a + density_b) / 2
  double avg_repeatability = 0.0;
  long long total_correct = 0;
  bool operator==(const MetricsReport&) const = default;
};

// Recomputes the aggregates from the records.
void aggregate(MetricsReport& report);

// Pairs (1, n) for n = 2..6. A failing pair aborts with its id in the message.
MetricsReport evaluate_sequence(const OxfordSequence& seq, const DetectorSpec& detector,
                                const DescriptorSpec& descriptor, const EvalSettings& settings);

std::string report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const std::string& text);
void save_report_json(const MetricsReport& report, const std::filesystem::path& path);
MetricsReport load_report_json(const std::filesystem::path& path);

// "pair,n_a,n_b,repeatability,n_correct,density_a,density_b"
void write_report_csv(std::ostream& out, const MetricsReport& report);
void save_report_csv(const MetricsReport& report, const std::filesystem::path& path);

}  // namespace deepdetect
