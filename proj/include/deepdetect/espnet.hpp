#pragma once

#include "deepdetect/image.hpp"
#include "deepdetect/nn_ops.hpp"
#include "deepdetect/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace deepdetect {

// Ordered, uniquely named parameter tensors. Non-trainable entries hold
// batch-norm running statistics.
template <typename S>
class ModelWeightsT {
 public:
  struct Entry {
    std::string name;
    TensorT<S> value;
    bool trainable = true;
    bool operator==(const Entry&) const = default;
  };

  void add(std::string name, TensorT<S> value, bool trainable = true) {
    if (index_.count(name)) throw InvalidArgument("duplicate parameter name '" + name + "'");
    index_.emplace(name, entries_.size());
    entries_.push_back({std::move(name), std::move(value), trainable});
  }
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  const Entry& entry(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw InvalidArgument("unknown parameter '" + name + "'");
    return entries_[it->second];
  }
  const TensorT<S>& at(const std::string& name) const { return entry(name).value; }
  TensorT<S>& at(const std::string& name) { return const_cast<Entry&>(entry(name)).value; }
  const std::vector<Entry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }
  size_t parameter_count() const {
    size_t n = 0;
    for (const Entry& e : entries_) n += e.value.size();
    return n;
  }

  template <typename Other>
  ModelWeightsT<Other> cast() const {
    ModelWeightsT<Other> out;
    for (const Entry& e : entries_) out.add(e.name, e.value.template cast<Other>(), e.trainable);
    return out;
  }

  bool operator==(const ModelWeightsT& other) const { return entries_ == other.entries_; }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, size_t> index_;
};

using ModelWeights = ModelWeightsT<float>;

// ---- reverse-mode tape ----

template <typename S>
struct NodeT {
  TensorT<S> value;
  TensorT<S> grad;
  bool requires_grad = false;
  bool has_grad = false;

  void accumulate(TensorT<S> g) {
    if (!has_grad) {
      grad = std::move(g);
      has_grad = true;
    } else {
      grad.array() += g.array();
    }
  }
};

template <typename S>
using VarT = std::shared_ptr<NodeT<S>>;

// Records backward closures in creation order, which is a topological order.
// A non-recording tape keeps nothing, so intermediate values are freed as
// soon as the forward pass drops them.
template <typename S>
class TapeT {
 public:
  using Backward = std::function<void(const TensorT<S>& grad_out)>;

  explicit TapeT(bool recording = true) : recording_(recording) {}
  bool recording() const { return recording_; }

  VarT<S> leaf(TensorT<S> value, bool requires_grad = false) {
    auto v = std::make_shared<NodeT<S>>();
    v->value = std::move(value);
    v->requires_grad = recording_ && requires_grad;
    return v;
  }

  VarT<S> op(TensorT<S> value, const std::vector<VarT<S>>& inputs, Backward backward) {
    auto out = std::make_shared<NodeT<S>>();
    out->value = std::move(value);
    if (recording_) {
      for (const auto& in : inputs) out->requires_grad = out->requires_grad || in->requires_grad;
      if (out->requires_grad) records_.push_back({out, std::move(backward)});
    }
    return out;
  }

  void backward(const VarT<S>& out, const TensorT<S>& seed) {
    if (!out->value.same_shape(seed)) throw InvalidArgument("backward: seed shape differs from output");
    out->accumulate(seed);
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
      if (it->out->has_grad) it->fn(it->out->grad);
    }
  }

 private:
  struct Record {
    VarT<S> out;
    Backward fn;
  };
  bool recording_;
  std::vector<Record> records_;
};

enum class Mode { Train, Infer };

inline constexpr double kBatchNormMomentum = 0.1;

// Binds weights, mode and tape for one forward pass.
template <typename S>
class GraphT {
 public:
  struct BatchStats {
    std::string prefix;
    std::vector<S> mean, var;  // biased batch variance
    int count = 0;             // elements per channel
  };

  GraphT(const ModelWeightsT<S>& weights, Mode mode, TapeT<S>& tape) : weights_(weights), mode_(mode), tape_(tape) {}

  Mode mode() const { return mode_; }
  TapeT<S>& tape() { return tape_; }
  const ModelWeightsT<S>& weights() const { return weights_; }

  VarT<S> param(const std::string& name) {
    auto it = params_.find(name);
    if (it != params_.end()) return it->second;
    const auto& e = weights_.entry(name);
    VarT<S> v = tape_.leaf(e.value, e.trainable);
    params_.emplace(name, v);
    return v;
  }

  // Gradients of every trainable parameter, in weight order; zero where
  // nothing flowed back.
  ModelWeightsT<S> gradients() const {
    ModelWeightsT<S> g;
    for (const auto& e : weights_.entries()) {
      if (!e.trainable) continue;
      auto it = params_.find(e.name);
      if (it != params_.end() && it->second->has_grad)
        g.add(e.name, it->second->grad);
      else
        g.add(e.name, TensorT<S>(e.value.shape()));
    }
    return g;
  }

  // Training-mode batch-norm layers append their batch statistics here.
  std::vector<BatchStats> batch_stats;
  // When set, ReLU layers append their inputs (activation-pattern probes).
  std::vector<TensorT<S>>* relu_inputs = nullptr;

 private:
  const ModelWeightsT<S>& weights_;
  Mode mode_;
  TapeT<S>& tape_;
  std::map<std::string, VarT<S>> params_;
};

// ---- layers on the tape ----

template <typename S>
VarT<S> conv_layer(GraphT<S>& g, const VarT<S>& x, const std::string& prefix, const ConvSpec& spec);
// Training mode normalizes with batch statistics, inference mode with the
// running statistics stored under prefix.running_mean / prefix.running_var.
template <typename S>
VarT<S> batchnorm_layer(GraphT<S>& g, const VarT<S>& x, const std::string& prefix);
template <typename S>
VarT<S> relu_layer(GraphT<S>& g, const VarT<S>& x);
template <typename S>
VarT<S> add_layer(GraphT<S>& g, const VarT<S>& a, const VarT<S>& b);
template <typename S>
VarT<S> upsample_layer(GraphT<S>& g, const VarT<S>& x);
template <typename S>
VarT<S> concat_layer(GraphT<S>& g, const std::vector<VarT<S>>& parts);

// ESP block: 1x1 reduce to out/K channels (3x3 stride 2 when downsampling),
// K parallel 3x3 convolutions with dilations 1, 2, 4, ..., cumulative sums of
// the branch outputs in dilation order, concatenation, batch norm, residual
// add when input and output shapes agree, ReLU.
struct EspSpec {
  int in = 16;
  int out = 16;
  int branches = 4;
  bool downsample = false;

  void validate() const;
  bool residual() const { return !downsample && in == out; }
};

template <typename S>
VarT<S> esp_layer(GraphT<S>& g, const VarT<S>& x, const std::string& prefix, const EspSpec& spec);

// Inference-mode convenience wrapper.
template <typename S>
TensorT<S> esp_module_forward(const TensorT<S>& x, const ModelWeightsT<S>& weights, const std::string& prefix,
                              const EspSpec& spec);

// ---- the network ----

struct ParamSpec {
  std::string name;
  std::vector<int> shape;
  bool trainable = true;
  int fan_in = 0;  // > 0 marks a convolution kernel
};

std::vector<ParamSpec> esp_module_params(const std::string& prefix, const EspSpec& spec);
std::vector<ParamSpec> espnet_architecture();

// He-normal kernels, zero biases, unit BN scale, zero BN shift, running
// statistics (0, 1).
ModelWeights init_weights(const std::vector<ParamSpec>& specs, uint64_t seed);
ModelWeights init_espnet(uint64_t seed);

// Names, order, shapes and trainable flags must match the architecture.
void validate_architecture(const ModelWeights& weights);

template <typename S>
VarT<S> espnet_graph(GraphT<S>& g, const VarT<S>& x);

// x: B x 3 x H x W normalized input, H and W divisible by 8. Returns the raw
// B x 1 x H x W logits computed in inference mode.
template <typename S>
TensorT<S> espnet_forward(const TensorT<S>& x, const ModelWeightsT<S>& weights);

template <typename S>
struct LossAndGrads {
  double loss = 0.0;
  TensorT<S> logits;
  ModelWeightsT<S> grads;
  std::vector<typename GraphT<S>::BatchStats> batch_stats;
};

// Mean BCE between labels y (B x 1 x H x W, values {0, 1}) and the network
// logits, with gradients for every trainable parameter.
template <typename S>
LossAndGrads<S> espnet_loss_and_grads(const TensorT<S>& x, const TensorT<S>& y, const ModelWeightsT<S>& weights,
                                      Mode mode, std::vector<TensorT<S>>* relu_inputs = nullptr);

// running = (1 - momentum) running + momentum batch, unbiased batch variance.
template <typename S>
void update_running_stats(ModelWeightsT<S>& weights, const std::vector<typename GraphT<S>::BatchStats>& stats,
                          double momentum = kBatchNormMomentum);

// ---- optimizer ----

template <typename S>
struct AdamStateT {
  int64_t step = 0;
  std::map<std::string, TensorT<S>> m, v;
  bool operator==(const AdamStateT&) const = default;
};
using AdamState = AdamStateT<float>;

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

// grads must hold exactly the trainable parameters with matching shapes.
template <typename S>
void optimizer_step(ModelWeightsT<S>& weights, const ModelWeightsT<S>& grads, double lr, AdamStateT<S>& state);

// ---- inference ----

// 1 x 3 x H x W tensor with values (v - 127.5) / 127.5.
Tensor image_to_tensor(const RgbImage& img);
Tensor images_to_tensor(const std::vector<const RgbImage*>& imgs);
Tensor masks_to_tensor(const std::vector<const BinaryMask*>& masks);

struct InferenceResult {
  ProbMap prob;
  BinaryMask mask;
};

// Mask is 1 where prob >= tau.
BinaryMask threshold_prob(const ProbMap& prob, double tau);

// Optional working_size resizes the image to working_size^2 before the
// network runs; the probability map is resized back to the input size.
ProbMap predict_prob(const RgbImage& img, const ModelWeights& weights, std::optional<int> working_size = {});
InferenceResult infer_mask(const RgbImage& img, const ModelWeights& weights, double tau,
                           std::optional<int> working_size = {});

// One keypoint per set pixel in raster order, scored by prob when given.
KeypointList mask_to_keypoints(const BinaryMask& mask, const ProbMap* prob = nullptr);

// ---- weight files ----
// Text header: "deepdetect-weights 1", then "name f32 d0 d1 ..." per tensor,
// then a "DATA" line followed by little-endian float32 values in header order.

void write_weights(std::ostream& out, const ModelWeights& weights);
ModelWeights read_weights(std::istream& in);
void save_weights(const std::filesystem::path& path, const ModelWeights& weights);
ModelWeights load_weights(const std::filesystem::path& path);

}  // namespace deepdetect
