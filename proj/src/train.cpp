#include "deepdetect/train.hpp"

#include "deepdetect/errors.hpp"
#include "deepdetect/imgproc.hpp"
#include "deepdetect/random.hpp"
#include "deepdetect/raster_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace deepdetect {

namespace {

// Decorrelates the shuffle stream from weight initialisation.
constexpr uint64_t kShuffleSalt = 0x5eedf00dULL;

struct Batch {
  Tensor x, y;
};

Batch make_batch(const std::vector<TrainExample>& set, const std::vector<size_t>& idx, size_t begin, size_t end) {
  std::vector<const RgbImage*> imgs;
  std::vector<const BinaryMask*> masks;
  for (size_t i = begin; i < end; ++i) {
    imgs.push_back(&set[idx[i]].image);
    masks.push_back(&set[idx[i]].mask);
  }
  return {images_to_tensor(imgs), masks_to_tensor(masks)};
}

double parse_double(const std::string& tok, const std::string& line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) {
    throw ParseError(ParseErrorKind::NonNumeric, "loss log: bad number '" + tok + "' in '" + line + "'");
  }
  return v;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (!(lr_min > 0.0 && lr_min <= lr_max)) throw InvalidArgument("need 0 < lr_min <= lr_max");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("tau must lie in (0, 1)");
  if (input_size < 8 || input_size % 8 != 0) throw InvalidArgument("input_size must be a positive multiple of 8");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw InvalidArgument("train_fraction must lie in (0, 1]");
}

TrainExample resize_example(const TrainExample& ex, int size) {
  if (width_of(ex.mask) != ex.image.width || height_of(ex.mask) != ex.image.height) {
    throw InvalidArgument("image and mask sizes differ");
  }
  if (ex.image.width == size && ex.image.height == size) return ex;
  return {resize_bilinear(ex.image, size, size), resize_nearest(ex.mask, size, size)};
}

double evaluate_loss(const std::vector<TrainExample>& examples, const ModelWeights& weights, int batch_size) {
  if (examples.empty()) throw InvalidArgument("evaluate_loss: no examples");
  std::vector<size_t> idx(examples.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  double total = 0.0;
  for (size_t b = 0; b < idx.size(); b += static_cast<size_t>(batch_size)) {
    const size_t e = std::min(idx.size(), b + static_cast<size_t>(batch_size));
    const Batch batch = make_batch(examples, idx, b, e);
    total += bce_loss(batch.y, espnet_forward(batch.x, weights)) * static_cast<double>(e - b);
  }
  return total / static_cast<double>(examples.size());
}

TrainResult train_examples(std::vector<TrainExample> train_set, std::vector<TrainExample> val_set,
                           const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw InvalidArgument("training needs at least one sample");
  for (auto& ex : train_set) ex = resize_example(ex, cfg.input_size);
  for (auto& ex : val_set) ex = resize_example(ex, cfg.input_size);
  const std::vector<TrainExample>& scored = val_set.empty() ? train_set : val_set;

  TrainResult result;
  result.n_train = train_set.size();
  result.n_val = val_set.size();
  ModelWeights weights = init_espnet(cfg.seed);
  AdamState adam;
  Rng rng(cfg.seed ^ kShuffleSalt);

  const size_t bs = static_cast<size_t>(cfg.batch_size);
  const int steps_per_epoch = static_cast<int>((train_set.size() + bs - 1) / bs);
  const int total_steps = cfg.epochs * steps_per_epoch;
  int step = 0;
  double best = std::numeric_limits<double>::infinity();
  std::vector<size_t> order(train_set.size());

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    rng.shuffle(order);
    double sum = 0.0;
    for (size_t b = 0; b < order.size(); b += bs) {
      const size_t e = std::min(order.size(), b + bs);
      const Batch batch = make_batch(train_set, order, b, e);
      const LossAndGrads<float> r = espnet_loss_and_grads(batch.x, batch.y, weights, Mode::Train);
      if (!std::isfinite(r.loss)) throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
      optimizer_step(weights, r.grads, cosine_lr(step, total_steps, cfg.lr_max, cfg.lr_min), adam);
      update_running_stats(weights, r.batch_stats);
      ++step;
      sum += r.loss * static_cast<double>(e - b);
    }
    LossRecord rec{epoch, sum / static_cast<double>(order.size()), evaluate_loss(scored, weights, cfg.batch_size)};
    result.log.push_back(rec);
    if (rec.val_loss < best) {
      best = rec.val_loss;
      result.weights = weights;
      result.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

TrainResult train(const std::vector<LabeledSample>& samples, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (samples.empty()) throw InvalidArgument("training needs at least one sample");
  std::vector<std::string> warnings;
  std::vector<LabeledSample> readable;
  std::map<std::filesystem::path, TrainExample> loaded;
  for (const LabeledSample& s : samples) {
    try {
      TrainExample ex{load_image(s.image_path), load_mask(s.mask_path)};
      if (width_of(ex.mask) != ex.image.width || height_of(ex.mask) != ex.image.height) {
        throw InvalidArgument("image and mask sizes differ");
      }
      loaded.emplace(s.image_path, resize_example(ex, cfg.input_size));
      readable.push_back(s);
    } catch (const std::exception& e) {
      warnings.push_back("skipped " + s.image_path.string() + ": " + e.what());
    }
  }
  if (readable.empty()) throw InvalidArgument("no readable training samples");

  std::vector<TrainExample> train_set, val_set;
  if (cfg.train_fraction < 1.0 && readable.size() >= 2) {
    const CorpusSplit split = split_corpus(readable, cfg.train_fraction, cfg.seed);
    for (const auto& s : split.train) train_set.push_back(loaded.at(s.image_path));
    for (const auto& s : split.val) val_set.push_back(loaded.at(s.image_path));
  } else {
    for (const auto& s : readable) train_set.push_back(loaded.at(s.image_path));
  }
  TrainResult r = train_examples(std::move(train_set), std::move(val_set), cfg, on_epoch);
  r.warnings.insert(r.warnings.begin(), warnings.begin(), warnings.end());
  return r;
}

void write_loss_log(std::ostream& out, const std::vector<LossRecord>& log) {
  out << "epoch,train_loss,val_loss\n";
  char buf[96];
  for (const LossRecord& r : log) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", r.epoch, r.train_loss, r.val_loss);
    out << buf;
  }
}

std::vector<LossRecord> read_loss_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "epoch,train_loss,val_loss") {
    throw ParseError(ParseErrorKind::TokenCount, "loss log: missing header");
  }
  std::vector<LossRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> tok;
    std::stringstream ss(line);
    for (std::string t; std::getline(ss, t, ',');) tok.push_back(t);
    if (tok.size() != 3) throw ParseError(ParseErrorKind::TokenCount, "loss log: expected 3 fields in '" + line + "'");
    LossRecord r;
    r.epoch = static_cast<int>(parse_double(tok[0], line));
    r.train_loss = parse_double(tok[1], line);
    r.val_loss = parse_double(tok[2], line);
    out.push_back(r);
  }
  return out;
}

void save_loss_log(const std::filesystem::path& path, const std::vector<LossRecord>& log) {
  std::ofstream out(path);
  if (!out) throw IoError(IoErrorKind::WriteFailed, "cannot open " + path.string() + " for writing");
  write_loss_log(out, log);
  if (!out) throw IoError(IoErrorKind::WriteFailed, "failed writing " + path.string());
}

std::vector<LossRecord> load_loss_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoErrorKind::MissingFile, "cannot open " + path.string());
  return read_loss_log(in);
}

}  // namespace deepdetect
