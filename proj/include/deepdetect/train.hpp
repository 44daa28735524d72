#pragma once

#include "deepdetect/dataset.hpp"
#include "deepdetect/espnet.hpp"

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace deepdetect {

struct TrainConfig {
  int epochs = 100;
  double lr_max = 1e-3;
  double lr_min = 1e-5;
  int batch_size = 64;
  double tau = 0.5;
  uint64_t seed = 0;
  int input_size = 480;
  // Share of readable samples used for training; 1 trains on everything and
  // scores the training set for the validation column.
  double train_fraction = 0.9;

  void validate() const;
};

struct TrainExample {
  RgbImage image;
  BinaryMask mask;
};

struct LossRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool operator==(const LossRecord&) const = default;
};

struct TrainResult {
  ModelWeights weights;  // lowest validation loss
  std::vector<LossRecord> log;
  int best_epoch = 0;
  size_t n_train = 0;
  size_t n_val = 0;
  std::vector<std::string> warnings;
};

using EpochCallback = std::function<void(const LossRecord&)>;

// Loads samples, skipping unreadable ones with a warning, splits them with
// the config seed and trains.
TrainResult train(const std::vector<LabeledSample>& samples, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// In-memory variant; an empty validation set means the training set is
// scored in inference mode instead.
TrainResult train_examples(std::vector<TrainExample> train_set, std::vector<TrainExample> val_set,
                           const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// Image bilinear, mask nearest-neighbour, both to size x size.
TrainExample resize_example(const TrainExample& ex, int size);

// Mean BCE of the network (inference mode) over the examples.
double evaluate_loss(const std::vector<TrainExample>& examples, const ModelWeights& weights, int batch_size);

// CSV "epoch,train_loss,val_loss" with round-trip precision.
void write_loss_log(std::ostream& out, const std::vector<LossRecord>& log);
std::vector<LossRecord> read_loss_log(std::istream& in);
void save_loss_log(const std::filesystem::path& path, const std::vector<LossRecord>& log);
std::vector<LossRecord> load_loss_log(const std::filesystem::path& path);

}  // namespace deepdetect
