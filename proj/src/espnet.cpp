#include "deepdetect/espnet.hpp"

#include "deepdetect/errors.hpp"
#include "deepdetect/random.hpp"

#include <cmath>

namespace deepdetect {

namespace {

template <typename S>
void accumulate_if(const VarT<S>& v, TensorT<S>&& g) {
  if (v->requires_grad) v->accumulate(std::move(g));
}

constexpr int kStemChannels = 16;
constexpr int kMidChannels = 32;
constexpr int kDeepChannels = 64;
constexpr int kInputChannels = 3;

// Layer plan shared by the parameter list and the forward graph.
const EspSpec kEnc1{kStemChannels, kStemChannels, 4, false};
const EspSpec kDown1{kStemChannels, kMidChannels, 4, true};
const EspSpec kEnc2{kMidChannels, kMidChannels, 4, false};
const EspSpec kDown2{kMidChannels, kDeepChannels, 4, true};
const EspSpec kEnc3{kDeepChannels, kDeepChannels, 4, false};

void add_conv(std::vector<ParamSpec>& out, const std::string& prefix, int o, int c, int k) {
  out.push_back({prefix + ".w", {o, c, k, k}, true, c * k * k});
  out.push_back({prefix + ".b", {o}, true, 0});
}

void add_bn(std::vector<ParamSpec>& out, const std::string& prefix, int c) {
  out.push_back({prefix + ".gamma", {c}, true, 0});
  out.push_back({prefix + ".beta", {c}, true, 0});
  out.push_back({prefix + ".running_mean", {c}, false, 0});
  out.push_back({prefix + ".running_var", {c}, false, 0});
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

template <typename S>
void check_architecture(const ModelWeightsT<S>& weights) {
  const auto arch = espnet_architecture();
  if (weights.size() != arch.size()) {
    throw InvalidArgument("weights hold " + std::to_string(weights.size()) + " tensors, architecture expects " +
                          std::to_string(arch.size()));
  }
  for (size_t i = 0; i < arch.size(); ++i) {
    const auto& e = weights.entries()[i];
    const ParamSpec& p = arch[i];
    if (e.name != p.name || e.value.shape() != p.shape || e.trainable != p.trainable) {
      throw InvalidArgument("weight " + std::to_string(i) + " is '" + e.name + "' " + e.value.shape_string() +
                            ", architecture expects '" + p.name + "' " + TensorT<S>(p.shape).shape_string());
    }
  }
}

}  // namespace

template <typename S>
VarT<S> conv_layer(GraphT<S>& g, const VarT<S>& x, const std::string& prefix, const ConvSpec& spec) {
  VarT<S> w = g.param(prefix + ".w"), b = g.param(prefix + ".b");
  TensorT<S> y = conv2d_forward(x->value, w->value, b->value, spec);
  return g.tape().op(std::move(y), {x, w, b}, [x, w, b, spec](const TensorT<S>& go) {
    ConvGrads<S> gr = conv2d_backward(x->value, w->value, go, spec);
    accumulate_if(x, std::move(gr.x));
    accumulate_if(w, std::move(gr.w));
    accumulate_if(b, std::move(gr.b));
  });
}

template <typename S>
VarT<S> batchnorm_layer(GraphT<S>& g, const VarT<S>& x, const std::string& prefix) {
  VarT<S> gamma = g.param(prefix + ".gamma"), beta = g.param(prefix + ".beta");
  if (g.mode() == Mode::Train) {
    auto cache = std::make_shared<BatchNormCache<S>>();
    TensorT<S> y = batchnorm_forward_train(x->value, gamma->value, beta->value, *cache);
    g.batch_stats.push_back({prefix, cache->mean, cache->var, x->value.dim(0) * x->value.dim(2) * x->value.dim(3)});
    return g.tape().op(std::move(y), {x, gamma, beta}, [x, gamma, beta, cache](const TensorT<S>& go) {
      BatchNormGrads<S> gr = batchnorm_backward_train(*cache, gamma->value, go);
      accumulate_if(x, std::move(gr.x));
      accumulate_if(gamma, std::move(gr.gamma));
      accumulate_if(beta, std::move(gr.beta));
    });
  }
  VarT<S> mean = g.param(prefix + ".running_mean"), var = g.param(prefix + ".running_var");
  TensorT<S> y = batchnorm_forward_infer(x->value, gamma->value, beta->value, mean->value, var->value);
  return g.tape().op(std::move(y), {x, gamma, beta}, [x, gamma, beta, mean, var](const TensorT<S>& go) {
    BatchNormGrads<S> gr = batchnorm_backward_infer(x->value, gamma->value, mean->value, var->value, go);
    accumulate_if(x, std::move(gr.x));
    accumulate_if(gamma, std::move(gr.gamma));
    accumulate_if(beta, std::move(gr.beta));
  });
}

template <typename S>
VarT<S> relu_layer(GraphT<S>& g, const VarT<S>& x) {
  if (g.relu_inputs) g.relu_inputs->push_back(x->value);
  return g.tape().op(relu_forward(x->value), {x},
                     [x](const TensorT<S>& go) { accumulate_if(x, relu_backward(x->value, go)); });
}

template <typename S>
VarT<S> add_layer(GraphT<S>& g, const VarT<S>& a, const VarT<S>& b) {
  if (!a->value.same_shape(b->value)) {
    throw InvalidArgument("add: shapes " + a->value.shape_string() + " and " + b->value.shape_string() + " differ");
  }
  TensorT<S> y = a->value;
  y.array() += b->value.array();
  return g.tape().op(std::move(y), {a, b}, [a, b](const TensorT<S>& go) {
    accumulate_if(a, TensorT<S>(go));
    accumulate_if(b, TensorT<S>(go));
  });
}

template <typename S>
VarT<S> upsample_layer(GraphT<S>& g, const VarT<S>& x) {
  return g.tape().op(upsample2x_forward(x->value), {x},
                     [x](const TensorT<S>& go) { accumulate_if(x, upsample2x_backward(go)); });
}

template <typename S>
VarT<S> concat_layer(GraphT<S>& g, const std::vector<VarT<S>>& parts) {
  std::vector<const TensorT<S>*> values;
  std::vector<int> channels;
  for (const auto& p : parts) {
    values.push_back(&p->value);
    channels.push_back(p->value.rank() == 4 ? p->value.dim(1) : 0);
  }
  return g.tape().op(concat_channels(values), parts, [parts, channels](const TensorT<S>& go) {
    auto pieces = split_channels(go, channels);
    for (size_t i = 0; i < parts.size(); ++i) accumulate_if(parts[i], std::move(pieces[i]));
  });
}

void EspSpec::validate() const {
  if (in < 1 || out < 1 || branches < 1) throw InvalidArgument("ESP module: channel and branch counts must be >= 1");
  if (out % branches != 0) {
    throw InvalidArgument("ESP module: " + std::to_string(out) + " channels not divisible by " +
                          std::to_string(branches) + " branches");
  }
}

template <typename S>
VarT<S> esp_layer(GraphT<S>& g, const VarT<S>& x, const std::string& prefix, const EspSpec& spec) {
  spec.validate();
  if (x->value.rank() != 4 || x->value.dim(1) != spec.in) {
    throw InvalidArgument("ESP module " + prefix + ": expected " + std::to_string(spec.in) + " input channels, got " +
                          x->value.shape_string());
  }
  const ConvSpec reduce_spec = spec.downsample ? ConvSpec{2, 1, 1} : ConvSpec{1, 1, 0};
  VarT<S> reduced = conv_layer(g, x, prefix + ".reduce", reduce_spec);
  std::vector<VarT<S>> fused;
  VarT<S> running;
  for (int i = 0; i < spec.branches; ++i) {
    const int dilation = 1 << i;
    VarT<S> branch =
        conv_layer(g, reduced, prefix + ".branch" + std::to_string(i), ConvSpec{1, dilation, dilation});
    running = i == 0 ? branch : add_layer(g, running, branch);
    fused.push_back(running);
  }
  VarT<S> y = batchnorm_layer(g, concat_layer(g, fused), prefix + ".bn");
  if (spec.residual()) y = add_layer(g, y, x);
  return relu_layer(g, y);
}

template <typename S>
TensorT<S> esp_module_forward(const TensorT<S>& x, const ModelWeightsT<S>& weights, const std::string& prefix,
                              const EspSpec& spec) {
  TapeT<S> tape(false);
  GraphT<S> g(weights, Mode::Infer, tape);
  return esp_layer(g, tape.leaf(x), prefix, spec)->value;
}

std::vector<ParamSpec> esp_module_params(const std::string& prefix, const EspSpec& spec) {
  spec.validate();
  const int d = spec.out / spec.branches;
  std::vector<ParamSpec> out;
  add_conv(out, prefix + ".reduce", d, spec.in, spec.downsample ? 3 : 1);
  for (int i = 0; i < spec.branches; ++i) add_conv(out, prefix + ".branch" + std::to_string(i), d, d, 3);
  add_bn(out, prefix + ".bn", spec.out);
  return out;
}

std::vector<ParamSpec> espnet_architecture() {
  std::vector<ParamSpec> out;
  auto append = [&out](std::vector<ParamSpec> more) { out.insert(out.end(), more.begin(), more.end()); };
  add_conv(out, "stem.conv", kStemChannels, kInputChannels, 3);
  add_bn(out, "stem.bn", kStemChannels);
  append(esp_module_params("enc1", kEnc1));
  append(esp_module_params("down1", kDown1));
  append(esp_module_params("enc2a", kEnc2));
  append(esp_module_params("enc2b", kEnc2));
  append(esp_module_params("down2", kDown2));
  append(esp_module_params("enc3a", kEnc3));
  append(esp_module_params("enc3b", kEnc3));
  add_conv(out, "dec1.conv", kMidChannels, kDeepChannels + kMidChannels, 1);
  add_bn(out, "dec1.bn", kMidChannels);
  add_conv(out, "dec2.conv", kStemChannels, kMidChannels + kStemChannels, 1);
  add_bn(out, "dec2.bn", kStemChannels);
  add_conv(out, "dec3.conv", kStemChannels, kStemChannels + kInputChannels, 1);
  add_bn(out, "dec3.bn", kStemChannels);
  add_conv(out, "head", 1, kStemChannels, 1);
  return out;
}

ModelWeights init_weights(const std::vector<ParamSpec>& specs, uint64_t seed) {
  Rng rng(seed);
  ModelWeights w;
  for (const ParamSpec& p : specs) {
    Tensor t(p.shape);
    if (p.fan_in > 0) {
      const double stddev = std::sqrt(2.0 / p.fan_in);
      for (auto& v : t.values()) v = static_cast<float>(stddev * rng.normal());
    } else if (ends_with(p.name, ".gamma") || ends_with(p.name, ".running_var")) {
      t.array() = 1.0f;
    }
    w.add(p.name, std::move(t), p.trainable);
  }
  return w;
}

ModelWeights init_espnet(uint64_t seed) { return init_weights(espnet_architecture(), seed); }

void validate_architecture(const ModelWeights& weights) { check_architecture(weights); }

template <typename S>
VarT<S> espnet_graph(GraphT<S>& g, const VarT<S>& x) {
  const TensorT<S>& in = x->value;
  if (in.rank() != 4 || in.dim(1) != kInputChannels) {
    throw InvalidArgument("network input must be B x 3 x H x W, got " + in.shape_string());
  }
  if (in.dim(2) % 8 != 0 || in.dim(3) % 8 != 0 || in.dim(2) == 0 || in.dim(3) == 0) {
    throw InvalidArgument("network input extents must be positive multiples of 8, got " + in.shape_string());
  }
  VarT<S> stem = relu_layer(g, batchnorm_layer(g, conv_layer(g, x, "stem.conv", ConvSpec{2, 1, 1}), "stem.bn"));
  VarT<S> e1 = esp_layer(g, stem, "enc1", kEnc1);
  VarT<S> e2 = esp_layer(g, esp_layer(g, e1, "down1", kDown1), "enc2a", kEnc2);
  e2 = esp_layer(g, e2, "enc2b", kEnc2);
  VarT<S> e3 = esp_layer(g, esp_layer(g, e2, "down2", kDown2), "enc3a", kEnc3);
  e3 = esp_layer(g, e3, "enc3b", kEnc3);

  auto decode = [&g](const VarT<S>& deep, const VarT<S>& skip, const std::string& name) {
    VarT<S> cat = concat_layer(g, {upsample_layer(g, deep), skip});
    return relu_layer(g, batchnorm_layer(g, conv_layer(g, cat, name + ".conv", ConvSpec{}), name + ".bn"));
  };
  VarT<S> d = decode(e3, e2, "dec1");
  d = decode(d, e1, "dec2");
  d = decode(d, x, "dec3");
  return conv_layer(g, d, "head", ConvSpec{});
}

template <typename S>
TensorT<S> espnet_forward(const TensorT<S>& x, const ModelWeightsT<S>& weights) {
  check_architecture(weights);
  TapeT<S> tape(false);
  GraphT<S> g(weights, Mode::Infer, tape);
  return espnet_graph(g, tape.leaf(x))->value;
}

template <typename S>
LossAndGrads<S> espnet_loss_and_grads(const TensorT<S>& x, const TensorT<S>& y, const ModelWeightsT<S>& weights,
                                      Mode mode, std::vector<TensorT<S>>* relu_inputs) {
  check_architecture(weights);
  TapeT<S> tape(true);
  GraphT<S> g(weights, mode, tape);
  g.relu_inputs = relu_inputs;
  VarT<S> logits = espnet_graph(g, tape.leaf(x));
  if (y.shape() != logits->value.shape()) {
    throw InvalidArgument("labels " + y.shape_string() + " do not match logits " + logits->value.shape_string());
  }
  LossAndGrads<S> out;
  out.loss = bce_loss(y, logits->value);
  tape.backward(logits, bce_grad(y, logits->value));
  out.logits = logits->value;
  out.grads = g.gradients();
  out.batch_stats = std::move(g.batch_stats);
  return out;
}

template <typename S>
void update_running_stats(ModelWeightsT<S>& weights, const std::vector<typename GraphT<S>::BatchStats>& stats,
                          double momentum) {
  for (const auto& s : stats) {
    TensorT<S>& mean = weights.at(s.prefix + ".running_mean");
    TensorT<S>& var = weights.at(s.prefix + ".running_var");
    const double unbias = s.count > 1 ? static_cast<double>(s.count) / (s.count - 1) : 1.0;
    for (size_t c = 0; c < s.mean.size(); ++c) {
      mean[c] = static_cast<S>((1 - momentum) * mean[c] + momentum * s.mean[c]);
      var[c] = static_cast<S>((1 - momentum) * var[c] + momentum * s.var[c] * unbias);
    }
  }
}

template <typename S>
void optimizer_step(ModelWeightsT<S>& weights, const ModelWeightsT<S>& grads, double lr, AdamStateT<S>& state) {
  size_t trainable = 0;
  for (const auto& e : weights.entries()) {
    if (!e.trainable) continue;
    ++trainable;
    if (!grads.contains(e.name)) throw InvalidArgument("optimizer: no gradient for '" + e.name + "'");
    if (!grads.at(e.name).same_shape(e.value)) {
      throw InvalidArgument("optimizer: gradient for '" + e.name + "' has shape " + grads.at(e.name).shape_string() +
                            ", parameter " + e.value.shape_string());
    }
  }
  if (grads.size() != trainable) throw InvalidArgument("optimizer: gradients name parameters not in the model");

  state.step += 1;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  for (const auto& e : weights.entries()) {
    if (!e.trainable) continue;
    TensorT<S>& p = weights.at(e.name);
    const TensorT<S>& gr = grads.at(e.name);
    auto [mi, fresh_m] = state.m.try_emplace(e.name, p.shape());
    auto [vi, fresh_v] = state.v.try_emplace(e.name, p.shape());
    TensorT<S>& m = mi->second;
    TensorT<S>& v = vi->second;
    if (!m.same_shape(p) || !v.same_shape(p)) throw InvalidArgument("optimizer: state shape mismatch for " + e.name);
    for (size_t i = 0; i < p.size(); ++i) {
      const double gi = gr[i];
      const double mi_new = kAdamBeta1 * m[i] + (1 - kAdamBeta1) * gi;
      const double vi_new = kAdamBeta2 * v[i] + (1 - kAdamBeta2) * gi * gi;
      m[i] = static_cast<S>(mi_new);
      v[i] = static_cast<S>(vi_new);
      p[i] = static_cast<S>(p[i] - lr * (mi_new / bc1) / (std::sqrt(vi_new / bc2) + kAdamEps));
    }
  }
}

#define DEEPDETECT_INSTANTIATE(S)                                                                                 \
  template VarT<S> conv_layer(GraphT<S>&, const VarT<S>&, const std::string&, const ConvSpec&);                   \
  template VarT<S> batchnorm_layer(GraphT<S>&, const VarT<S>&, const std::string&);                               \
  template VarT<S> relu_layer(GraphT<S>&, const VarT<S>&);                                                        \
  template VarT<S> add_layer(GraphT<S>&, const VarT<S>&, const VarT<S>&);                                         \
  template VarT<S> upsample_layer(GraphT<S>&, const VarT<S>&);                                                    \
  template VarT<S> concat_layer(GraphT<S>&, const std::vector<VarT<S>>&);                                         \
  template VarT<S> esp_layer(GraphT<S>&, const VarT<S>&, const std::string&, const EspSpec&);                     \
  template TensorT<S> esp_module_forward(const TensorT<S>&, const ModelWeightsT<S>&, const std::string&,           \
                                         const EspSpec&);                                                         \
  template VarT<S> espnet_graph(GraphT<S>&, const VarT<S>&);                                                      \
  template TensorT<S> espnet_forward(const TensorT<S>&, const ModelWeightsT<S>&);                                 \
  template LossAndGrads<S> espnet_loss_and_grads(const TensorT<S>&, const TensorT<S>&, const ModelWeightsT<S>&,    \
                                                 Mode, std::vector<TensorT<S>>*);                                                           \
  template void update_running_stats<S>(ModelWeightsT<S>&, const std::vector<typename GraphT<S>::BatchStats>&,    \
                                        double);                                                                  \
  template void optimizer_step(ModelWeightsT<S>&, const ModelWeightsT<S>&, double, AdamStateT<S>&);

DEEPDETECT_INSTANTIATE(float)
DEEPDETECT_INSTANTIATE(double)

#undef DEEPDETECT_INSTANTIATE

}  // namespace deepdetect
