#include "deepdetect/cli.hpp"

#include "deepdetect/dataset.hpp"
#include "deepdetect/descmatch.hpp"
#include "deepdetect/errors.hpp"
#include "deepdetect/espnet.hpp"
#include "deepdetect/imgproc.hpp"
#include "deepdetect/keypoint_io.hpp"
#include "deepdetect/metrics.hpp"
#include "deepdetect/raster_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

namespace deepdetect {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// ---- config file ----

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw UsageError("config: " + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw UsageError("config: unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read_key(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

void read_profile(const json& j, DetectorProfile& p, const std::string& where) {
  static const std::vector<std::pair<const char*, double DetectorProfile::*>> doubles{
      {"harris_k", &DetectorProfile::harris_k},      {"harris_rel_t", &DetectorProfile::harris_rel_t},
      {"shi_rel_t", &DetectorProfile::shi_rel_t},    {"dog_contrast_t", &DetectorProfile::dog_contrast_t},
      {"dog_edge_r", &DetectorProfile::dog_edge_r},  {"canny_lo", &DetectorProfile::canny_lo},
      {"canny_hi", &DetectorProfile::canny_hi},      {"sobel_mag_t", &DetectorProfile::sobel_mag_t},
      {"orb_scale", &DetectorProfile::orb_scale}};
  static const std::vector<std::pair<const char*, int DetectorProfile::*>> ints{
      {"fast_t", &DetectorProfile::fast_t},
      {"brisk_octaves", &DetectorProfile::brisk_octaves},
      {"orb_levels", &DetectorProfile::orb_levels},
      {"nms_radius", &DetectorProfile::nms_radius}};
  std::vector<std::string> allowed;
  for (const auto& d : doubles) allowed.push_back(d.first);
  for (const auto& i : ints) allowed.push_back(i.first);
  check_keys(j, allowed, where);
  for (const auto& [key, member] : doubles) read_key(j, key, p.*member);
  for (const auto& [key, member] : ints) read_key(j, key, p.*member);
}

// ---- shared option groups ----

struct DetectorOptions {
  std::string detector;
  std::string profile = "normal";
  std::optional<std::string> weights;
  double tau = 0.5;
  std::optional<int> working_size;

  void add(CLI::App* cmd) {
    cmd->add_option("--detector,-d", detector, "sift-dog, orb, brisk, fast, agast, harris, shi-tomasi or deep")
        ->required();
    cmd->add_option("--profile", profile, "threshold profile: normal or low");
    cmd->add_option("--weights", weights, "network weights (detector deep)");
    cmd->add_option("--tau", tau, "probability threshold (detector deep)");
    cmd->add_option("--working-size", working_size, "run the network at this square size");
  }

  DetectorSpec build(const AppConfig& cfg) const {
    if (detector == "deep") {
      if (!weights) throw UsageError("--detector deep needs --weights");
      if (!(tau > 0.0 && tau < 1.0)) throw UsageError("--tau must lie in (0, 1)");
      if (working_size && *working_size < 8) throw UsageError("--working-size must be >= 8");
      auto w = std::make_shared<const ModelWeights>(load_weights(*weights));
      return DetectorSpec::network(std::move(w), tau, working_size);
    }
    const auto kind = parse_detector_kind(detector);
    if (!kind) throw UsageError("unknown detector '" + detector + "'");
    const auto pname = parse_profile_name(profile);
    if (!pname) throw UsageError("unknown profile '" + profile + "' (normal or low)");
    DetectorSpec spec = DetectorSpec::classical(*kind, *pname);
    spec.profile = *pname == ProfileName::Low ? cfg.profiles.low : cfg.profiles.normal;
    return spec;
  }
};

struct DescriptorOptions {
  std::string descriptor = "auto";
  std::optional<bool> oriented;

  void add(CLI::App* cmd) {
    cmd->add_option("--descriptor", descriptor, "auto, sift or brief");
    cmd->add_flag("--oriented", oriented, "rotate SIFT patches to the dominant orientation");
  }

  DescriptorSpec build(const AppConfig& cfg) const {
    DescriptorSpec s;
    if (descriptor == "sift")
      s.choice = DescriptorChoice::Sift;
    else if (descriptor == "brief")
      s.choice = DescriptorChoice::Brief;
    else if (descriptor != "auto")
      throw UsageError("unknown descriptor '" + descriptor + "' (auto, sift or brief)");
    s.oriented = oriented.value_or(cfg.match.oriented);
    s.brief_seed = cfg.seed;
    return s;
  }
};

struct MatchOptions {
  std::optional<double> ratio, eps;
  std::optional<bool> cross_check;

  void add(CLI::App* cmd) {
    cmd->add_option("--ratio", ratio, "NNDR ratio threshold");
    cmd->add_option("--eps", eps, "correct-match / repeatability distance in pixels");
    cmd->add_flag("--cross-check", cross_check, "keep mutual nearest neighbours only");
  }

  EvalSettings build(const AppConfig& cfg) const {
    EvalSettings s;
    s.ratio = ratio.value_or(cfg.match.ratio);
    s.eps = eps.value_or(cfg.match.eps);
    s.cross_check = cross_check.value_or(cfg.match.cross_check);
    try {
      s.validate();
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    return s;
  }
};

std::string safe_label(std::string s) {
  for (char& c : s)
    if (c == '/' || c == ' ') c = '-';
  return s;
}

// ---- commands ----

struct Context {
  AppConfig cfg;
  std::ostream& out;
  std::ostream& err;
};

struct DetectCmd {
  std::string image;
  DetectorOptions det;
  std::optional<std::string> out_path;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("detect", "detect keypoints in one image");
    cmd->add_option("image", image, "PPM/PGM image")->required();
    det.add(cmd);
    cmd->add_option("--out,-o", out_path, "keypoint CSV (default <output_dir>/<image>.<detector>.csv)");
  }

  int run(Context& ctx) const {
    const DetectorSpec spec = det.build(ctx.cfg);
    const RgbImage img = load_image(image);
    const KeypointList kps = run_detector(spec, img);
    const std::filesystem::path path =
        out_path ? std::filesystem::path(*out_path)
                 : ctx.cfg.io.output_dir / (std::filesystem::path(image).stem().string() + "." + det.detector + ".csv");
    save_keypoints_csv(kps, path);
    ctx.out << "keypoints: " << kps.size() << "\n"
            << "density: " << num(keypoint_density(static_cast<long long>(kps.size()), img.width, img.height))
            << "\n"
            << "wrote: " << path.string() << "\n";
    return 0;
  }
};

struct FuseCmd {
  std::string src, dst;
  double fraction = 0.25;
  std::optional<uint64_t> seed;
  int dilation = 0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("fuse", "build fused supervision masks for a directory of images");
    cmd->add_option("--src", src, "directory of PPM/PGM images")->required();
    cmd->add_option("--out", dst, "output directory")->required();
    cmd->add_option("--fraction", fraction, "share of images to degrade");
    cmd->add_option("--seed", seed, "seed for the degradation picks");
    cmd->add_option("--dilation", dilation, "dilate keypoint marks by this radius");
  }

  int run(Context& ctx) const {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw UsageError("--fraction must lie in [0, 1]");
    if (dilation < 0) throw UsageError("--dilation must be >= 0");
    CorpusOptions opts;
    opts.degrade_fraction = fraction;
    opts.seed = seed.value_or(ctx.cfg.seed);
    opts.profiles = ctx.cfg.profiles;
    opts.dilation_radius = dilation;
    const Manifest m = generate_corpus(src, dst, opts);
    int degraded = 0;
    for (const auto& s : m.samples) degraded += s.degraded;
    for (const auto& w : m.warnings) ctx.err << "warning: " << w << "\n";
    ctx.out << "manifest: " << (std::filesystem::path(dst) / "manifest.jsonl").string() << "\n"
            << "samples: " << m.samples.size() << "\n"
            << "degraded: " << degraded << "\n"
            << "skipped: " << m.skipped << "\n";
    return 0;
  }
};

struct TrainCmd {
  std::string manifest, weights_out;
  std::optional<std::string> log_out;
  std::optional<int> epochs, batch_size, input_size;
  std::optional<double> lr_max, lr_min, train_fraction;
  std::optional<uint64_t> seed;
  bool resume = false;
  bool quiet = false;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "train the network on a fused-label manifest");
    cmd->add_option("--manifest", manifest, "manifest.jsonl written by fuse")->required();
    cmd->add_option("--out,-o", weights_out, "weights file to write")->required();
    cmd->add_option("--log", log_out, "loss CSV (default <weights>.loss.csv)");
    cmd->add_option("--epochs", epochs);
    cmd->add_option("--batch-size", batch_size);
    cmd->add_option("--input-size", input_size);
    cmd->add_option("--lr-max", lr_max);
    cmd->add_option("--lr-min", lr_min);
    cmd->add_option("--train-fraction", train_fraction);
    cmd->add_option("--seed", seed);
    cmd->add_flag("--resume", resume, "not supported");
    cmd->add_flag("--quiet,-q", quiet, "no per-epoch lines");
  }

  TrainConfig config(const AppConfig& app) const {
    TrainConfig c = app.train;
    if (epochs) c.epochs = *epochs;
    if (batch_size) c.batch_size = *batch_size;
    if (input_size) c.input_size = *input_size;
    if (lr_max) c.lr_max = *lr_max;
    if (lr_min) c.lr_min = *lr_min;
    if (train_fraction) c.train_fraction = *train_fraction;
    if (seed) c.seed = *seed;
    try {
      c.validate();
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    return c;
  }

  int run(Context& ctx) const {
    if (resume) throw UsageError("--resume is not supported: training always starts from fresh weights");
    const TrainConfig cfg = config(ctx.cfg);
    const Manifest m = read_manifest(manifest);
    EpochCallback cb;
    if (!quiet) {
      cb = [&ctx](const LossRecord& r) {
        ctx.out << "epoch " << r.epoch << " train " << num(r.train_loss) << " val " << num(r.val_loss) << "\n";
      };
    }
    const TrainResult res = train(m.samples, cfg, cb);
    for (const auto& w : res.warnings) ctx.err << "warning: " << w << "\n";
    const std::filesystem::path log_path = log_out ? std::filesystem::path(*log_out)
                                                   : std::filesystem::path(weights_out + ".loss.csv");
    save_weights(weights_out, res.weights);
    save_loss_log(log_path, res.log);
    ctx.out << "train samples: " << res.n_train << "\n"
            << "val samples: " << res.n_val << "\n"
            << "best epoch: " << res.best_epoch << "\n"
            << "weights: " << weights_out << "\n"
            << "loss log: " << log_path.string() << "\n";
    return 0;
  }
};

struct InferCmd {
  std::string image, weights;
  double tau = 0.5;
  std::optional<int> working_size;
  std::optional<std::string> mask_out, prob_out, keypoints_out, sweep_out;
  std::vector<double> sweep;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("infer", "predict a keypoint mask with trained weights");
    cmd->add_option("image", image, "PPM/PGM image")->required();
    cmd->add_option("--weights", weights)->required();
    cmd->add_option("--tau", tau, "probability threshold");
    cmd->add_option("--working-size", working_size);
    cmd->add_option("--mask", mask_out, "mask PGM (default <output_dir>/<image>.mask.pgm)");
    cmd->add_option("--prob", prob_out, "probability map as PGM scaled to 0-255");
    cmd->add_option("--keypoints", keypoints_out, "keypoint CSV");
    cmd->add_option("--sweep", sweep, "thresholds for a density sweep, e.g. --sweep 0.5 0.7 0.8 0.9");
    cmd->add_option("--sweep-out", sweep_out, "sweep CSV (default <output_dir>/<image>.tau_sweep.csv)");
  }

  int run(Context& ctx) const {
    auto check_tau = [](double t) {
      if (!(t > 0.0 && t < 1.0)) throw UsageError("thresholds must lie in (0, 1), got " + num(t));
    };
    check_tau(tau);
    for (double t : sweep) check_tau(t);
    if (working_size && *working_size < 8) throw UsageError("--working-size must be >= 8");
    const ModelWeights w = load_weights(weights);
    const RgbImage img = load_image(image);
    const InferenceResult r = infer_mask(img, w, tau, working_size);
    const std::string stem = std::filesystem::path(image).stem().string();
    const std::filesystem::path mask_path =
        mask_out ? std::filesystem::path(*mask_out) : ctx.cfg.io.output_dir / (stem + ".mask.pgm");
    save_mask(r.mask, mask_path);
    if (prob_out) save_gray(r.prob * 255.0f, *prob_out);
    const KeypointList kps = mask_to_keypoints(r.mask, &r.prob);
    if (keypoints_out) save_keypoints_csv(kps, *keypoints_out);
    ctx.out << "keypoints: " << kps.size() << "\n"
            << "density: " << num(keypoint_density(static_cast<long long>(kps.size()), img.width, img.height))
            << "\n"
            << "mask: " << mask_path.string() << "\n";
    if (!sweep.empty()) {
      const std::filesystem::path path =
          sweep_out ? std::filesystem::path(*sweep_out) : ctx.cfg.io.output_dir / (stem + ".tau_sweep.csv");
      std::ofstream f(path);
      if (!f) throw IoError(IoErrorKind::WriteFailed, "cannot open " + path.string() + " for writing");
      f << "tau,count,density\n";
      for (double t : sweep) {
        const long long n = threshold_prob(r.prob, t).cast<long long>().sum();
        f << num(t) << ',' << n << ',' << num(keypoint_density(n, img.width, img.height)) << '\n';
      }
      if (!f) throw IoError(IoErrorKind::WriteFailed, "failed writing " + path.string());
      ctx.out << "sweep: " << path.string() << "\n";
    }
    return 0;
  }
};

struct EvalCmd {
  std::string sequence;
  DetectorOptions det;
  DescriptorOptions desc;
  MatchOptions match;
  bool presence_only = false;
  std::optional<std::string> json_out, csv_out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "evaluate a detector on an Oxford-style sequence");
    cmd->add_option("sequence", sequence, "directory with img1..img6 and H1to2p..H1to6p")->required();
    det.add(cmd);
    desc.add(cmd);
    match.add(cmd);
    cmd->add_flag("--presence-only", presence_only, "literal overlap count for repeatability");
    cmd->add_option("--json", json_out, "report JSON (default <output_dir>/<sequence>.<detector>.json)");
    cmd->add_option("--csv", csv_out, "per-pair CSV (default <output_dir>/<sequence>.<detector>.csv)");
  }

  int run(Context& ctx) const {
    const DetectorSpec spec = det.build(ctx.cfg);
    const DescriptorSpec dspec = desc.build(ctx.cfg);
    EvalSettings settings = match.build(ctx.cfg);
    settings.presence_only = presence_only;
    const OxfordSequence seq = load_sequence(sequence);
    const MetricsReport rep = evaluate_sequence(seq, spec, dspec, settings);
    const std::string base = safe_label(seq.name + "." + rep.detector);
    const std::filesystem::path jp = json_out ? std::filesystem::path(*json_out) : ctx.cfg.io.output_dir / (base + ".json");
    const std::filesystem::path cp = csv_out ? std::filesystem::path(*csv_out) : ctx.cfg.io.output_dir / (base + ".csv");
    save_report_json(rep, jp);
    save_report_csv(rep, cp);
    for (const auto& r : rep.records) {
      ctx.out << "pair " << r.pair << ": n_a " << r.n_a << " n_b " << r.n_b << " repeatability "
              << num(r.repeatability) << " matches " << r.n_matches << " correct " << r.n_correct << "\n";
    }
    ctx.out << "avg density: " << num(rep.avg_density) << "\n"
            << "avg repeatability: " << num(rep.avg_repeatability) << "\n"
            << "total correct: " << rep.total_correct << "\n"
            << "report: " << jp.string() << "\n";
    return 0;
  }
};

struct MatchCmd {
  std::string image_a, image_b;
  std::optional<std::string> homography, out_path;
  DetectorOptions det;
  DescriptorOptions desc;
  MatchOptions match;
  std::optional<int> iters;
  std::optional<uint64_t> seed;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("match", "detect, describe and match two images");
    cmd->add_option("image_a", image_a)->required();
    cmd->add_option("image_b", image_b)->required();
    cmd->add_option("--homography,-H", homography, "ground-truth homography file (a -> b)");
    det.add(cmd);
    desc.add(cmd);
    match.add(cmd);
    cmd->add_option("--ransac-iters", iters, "RANSAC iterations when no homography is given");
    cmd->add_option("--seed", seed, "RANSAC seed");
    cmd->add_option("--out,-o", out_path, "matches CSV (default <output_dir>/<a>_<b>.matches.csv)");
  }

  int run(Context& ctx) const {
    const DetectorSpec spec = det.build(ctx.cfg);
    const DescriptorSpec dspec = desc.build(ctx.cfg);
    const EvalSettings settings = match.build(ctx.cfg);
    const int n_iters = iters.value_or(ctx.cfg.match.ransac_iters);
    if (n_iters < 1) throw UsageError("--ransac-iters must be >= 1");
    std::optional<Homography> h;
    if (homography) h = parse_homography_file(*homography);

    const RgbImage a = load_image(image_a), b = load_image(image_b);
    const KeypointList ka = run_detector(spec, a), kb = run_detector(spec, b);
    const DescriptorList da = describe(dspec, spec, rgb_to_gray(a), ka);
    const DescriptorList db = describe(dspec, spec, rgb_to_gray(b), kb);
    MatchList matches = nndr_match(da, db, settings.ratio);
    if (settings.cross_check) matches = cross_check(matches, da, db);
    const std::filesystem::path path =
        out_path ? std::filesystem::path(*out_path)
                 : ctx.cfg.io.output_dir / (std::filesystem::path(image_a).stem().string() + "_" +
                                            std::filesystem::path(image_b).stem().string() + ".matches.csv");
    save_matches(path, matches);
    ctx.out << "keypoints: " << ka.size() << " " << kb.size() << "\n"
            << "matches: " << matches.size() << "\n";
    if (h) {
      ctx.out << "correct: " << count_correct(matches, ka, kb, *h, settings.eps) << "\n";
    } else {
      const RansacResult r = ransac_homography(ka, kb, matches, n_iters, settings.eps, seed.value_or(ctx.cfg.seed));
      ctx.out << "inliers: " << r.n_inliers << "\n"
              << "homography: " << format_homography(r.h) << "\n";
    }
    ctx.out << "wrote: " << path.string() << "\n";
    return 0;
  }
};

}  // namespace

void AppConfig::validate() const {
  try {
    profiles.normal.validate();
    profiles.low.validate();
    train.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  if (!(match.ratio > 0.0 && match.ratio <= 1.0)) throw UsageError("config: match.ratio must lie in (0, 1]");
  if (!(match.eps > 0.0)) throw UsageError("config: match.eps must be positive");
  if (match.ransac_iters < 1) throw UsageError("config: match.ransac_iters must be >= 1");
}

AppConfig parse_app_config(const std::string& json_text) {
  AppConfig cfg;
  try {
    const json j = json::parse(json_text);
    check_keys(j, {"profiles", "train", "match", "io", "seed"}, "top level");
    read_key(j, "seed", cfg.seed);
    cfg.train.seed = cfg.seed;
    if (j.contains("profiles")) {
      const json& p = j.at("profiles");
      check_keys(p, {"normal", "low"}, "profiles");
      if (p.contains("normal")) read_profile(p.at("normal"), cfg.profiles.normal, "profiles.normal");
      if (p.contains("low")) read_profile(p.at("low"), cfg.profiles.low, "profiles.low");
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      check_keys(t, {"epochs", "lr_max", "lr_min", "batch_size", "tau", "seed", "input_size", "train_fraction"},
                 "train");
      read_key(t, "epochs", cfg.train.epochs);
      read_key(t, "lr_max", cfg.train.lr_max);
      read_key(t, "lr_min", cfg.train.lr_min);
      read_key(t, "batch_size", cfg.train.batch_size);
      read_key(t, "tau", cfg.train.tau);
      read_key(t, "seed", cfg.train.seed);
      read_key(t, "input_size", cfg.train.input_size);
      read_key(t, "train_fraction", cfg.train.train_fraction);
    }
    if (j.contains("match")) {
      const json& m = j.at("match");
      check_keys(m, {"ratio", "eps", "oriented", "cross_check", "ransac_iters"}, "match");
      read_key(m, "ratio", cfg.match.ratio);
      read_key(m, "eps", cfg.match.eps);
      read_key(m, "oriented", cfg.match.oriented);
      read_key(m, "cross_check", cfg.match.cross_check);
      read_key(m, "ransac_iters", cfg.match.ransac_iters);
    }
    if (j.contains("io")) {
      const json& io = j.at("io");
      check_keys(io, {"output_dir"}, "io");
      if (io.contains("output_dir")) cfg.io.output_dir = io.at("output_dir").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

AppConfig load_app_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_app_config(ss.str());
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Keypoint detection, fusion labels, training and evaluation", "deepdetect"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::string> config_path;
  std::optional<uint64_t> seed;
  std::optional<std::string> output_dir;
  app.add_option("--config,-c", config_path, "JSON config file");
  app.add_option("--seed", seed, "seed for every command (overrides the config)");
  app.add_option("--output-dir", output_dir, "directory for default output paths");

  DetectCmd detect;
  FuseCmd fuse;
  TrainCmd train_cmd;
  InferCmd infer;
  EvalCmd eval;
  MatchCmd match;
  detect.add(app);
  fuse.add(app);
  train_cmd.add(app);
  infer.add(app);
  eval.add(app);
  match.add(app);

  std::vector<std::string> storage{"deepdetect"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    Context ctx{config_path ? load_app_config(*config_path) : AppConfig{}, out, err};
    if (seed) {
      ctx.cfg.seed = *seed;
      ctx.cfg.train.seed = *seed;
    }
    if (output_dir) ctx.cfg.io.output_dir = *output_dir;

    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "detect") return detect.run(ctx);
    if (name == "fuse") return fuse.run(ctx);
    if (name == "train") return train_cmd.run(ctx);
    if (name == "infer") return infer.run(ctx);
    if (name == "eval") return eval.run(ctx);
    return match.run(ctx);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace deepdetect
