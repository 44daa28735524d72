#include "deepdetect/nn_ops.hpp"

#include "deepdetect/errors.hpp"

#include <cmath>
#include <numbers>

namespace deepdetect {

namespace {

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ConvGeometry {
  int n, c, h, w, o, k, ho, wo;
};

template <typename S>
ConvGeometry conv_geometry(const TensorT<S>& x, const TensorT<S>& w, const ConvSpec& spec) {
  auto fail = [&](const char* why) {
    throw InvalidArgument(std::string("conv2d: ") + why + " (input " + x.shape_string() + ", kernel " +
                          w.shape_string() + ")");
  };
  if (x.rank() != 4 || w.rank() != 4) fail("expected rank-4 input and kernel");
  if (w.dim(1) != x.dim(1)) fail("kernel input channels differ from input channels");
  if (w.dim(2) != w.dim(3)) fail("kernel must be square");
  if (spec.stride < 1 || spec.dilation < 1 || spec.padding < 0) fail("invalid stride, dilation or padding");
  ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(2), 0, 0};
  const int span = spec.dilation * (g.k - 1) + 1;
  g.ho = (g.h + 2 * spec.padding - span) / spec.stride + 1;
  g.wo = (g.w + 2 * spec.padding - span) / spec.stride + 1;
  if (g.h + 2 * spec.padding < span || g.w + 2 * spec.padding < span) fail("kernel larger than padded input");
  return g;
}

bool is_pointwise(const ConvGeometry& g, const ConvSpec& spec) {
  return g.k == 1 && spec.stride == 1 && spec.padding == 0;
}

template <typename S>
void im2col(const S* x, const ConvGeometry& g, const ConvSpec& spec, RowMat<S>& col) {
  col.resize(static_cast<Eigen::Index>(g.c) * g.k * g.k, static_cast<Eigen::Index>(g.ho) * g.wo);
  for (int c = 0; c < g.c; ++c) {
    const S* plane = x + static_cast<size_t>(c) * g.h * g.w;
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        S* row = col.row((c * g.k + ky) * g.k + kx).data();
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * spec.stride - spec.padding + ky * spec.dilation;
          S* dst = row + static_cast<size_t>(oy) * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + g.wo, S(0));
            continue;
          }
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * spec.stride - spec.padding + kx * spec.dilation;
            dst[ox] = (ix < 0 || ix >= g.w) ? S(0) : plane[static_cast<size_t>(iy) * g.w + ix];
          }
        }
      }
    }
  }
}

template <typename S>
void col2im_add(const RowMat<S>& col, const ConvGeometry& g, const ConvSpec& spec, S* x) {
  for (int c = 0; c < g.c; ++c) {
    S* plane = x + static_cast<size_t>(c) * g.h * g.w;
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        const S* row = col.row((c * g.k + ky) * g.k + kx).data();
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * spec.stride - spec.padding + ky * spec.dilation;
          if (iy < 0 || iy >= g.h) continue;
          const S* src = row + static_cast<size_t>(oy) * g.wo;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * spec.stride - spec.padding + kx * spec.dilation;
            if (ix >= 0 && ix < g.w) plane[static_cast<size_t>(iy) * g.w + ix] += src[ox];
          }
        }
      }
    }
  }
}

struct Tap {
  int i0, i1;
  double f;
};

std::vector<Tap> upsample_taps(int n_in) {
  std::vector<Tap> taps(static_cast<size_t>(2 * n_in));
  for (int o = 0; o < 2 * n_in; ++o) {
    const double s = std::clamp((o + 0.5) / 2.0 - 0.5, 0.0, static_cast<double>(n_in - 1));
    const int i0 = static_cast<int>(std::floor(s));
    taps[o] = {i0, std::min(i0 + 1, n_in - 1), s - i0};
  }
  return taps;
}

template <typename S>
void require_channel_vector(const TensorT<S>& v, int channels, const char* what) {
  if (v.rank() != 1 || v.dim(0) != channels) {
    throw InvalidArgument(std::string("batchnorm: ") + what + " must have shape [" + std::to_string(channels) +
                          "], got " + v.shape_string());
  }
}

template <typename S>
void require_rank4(const TensorT<S>& x, const char* op) {
  if (x.rank() != 4) throw InvalidArgument(std::string(op) + ": expected rank-4 tensor, got " + x.shape_string());
}

}  // namespace

template <typename S>
TensorT<S> conv2d_forward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& b, const ConvSpec& spec) {
  const ConvGeometry g = conv_geometry(x, w, spec);
  if (b.rank() != 1 || b.dim(0) != g.o) {
    throw InvalidArgument("conv2d: bias shape " + b.shape_string() + " does not match kernel " + w.shape_string());
  }
  const Eigen::Index ckk = static_cast<Eigen::Index>(g.c) * g.k * g.k;
  const Eigen::Index hw_in = static_cast<Eigen::Index>(g.h) * g.w;
  const Eigen::Index hw_out = static_cast<Eigen::Index>(g.ho) * g.wo;
  TensorT<S> out({g.n, g.o, g.ho, g.wo});
  Eigen::Map<const RowMat<S>> kernel(w.data(), g.o, ckk);
  Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>> bias(b.data(), g.o);
  RowMat<S> col;
  for (int n = 0; n < g.n; ++n) {
    Eigen::Map<RowMat<S>> out_n(out.data() + n * g.o * hw_out, g.o, hw_out);
    if (is_pointwise(g, spec)) {
      out_n.noalias() = kernel * Eigen::Map<const RowMat<S>>(x.data() + n * g.c * hw_in, g.c, hw_in);
    } else {
      im2col(x.data() + n * g.c * hw_in, g, spec, col);
      out_n.noalias() = kernel * col;
    }
    out_n.colwise() += bias;
  }
  return out;
}

template <typename S>
ConvGrads<S> conv2d_backward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& grad_out,
                             const ConvSpec& spec) {
  const ConvGeometry g = conv_geometry(x, w, spec);
  if (grad_out.shape() != std::vector<int>{g.n, g.o, g.ho, g.wo}) {
    throw InvalidArgument("conv2d backward: gradient shape " + grad_out.shape_string() + " does not match output");
  }
  const Eigen::Index ckk = static_cast<Eigen::Index>(g.c) * g.k * g.k;
  const Eigen::Index hw_in = static_cast<Eigen::Index>(g.h) * g.w;
  const Eigen::Index hw_out = static_cast<Eigen::Index>(g.ho) * g.wo;
  ConvGrads<S> grads{TensorT<S>(x.shape()), TensorT<S>(w.shape()), TensorT<S>({g.o})};
  Eigen::Map<const RowMat<S>> kernel(w.data(), g.o, ckk);
  Eigen::Map<RowMat<S>> gw(grads.w.data(), g.o, ckk);
  Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>> gb(grads.b.data(), g.o);
  RowMat<S> col, gcol;
  for (int n = 0; n < g.n; ++n) {
    Eigen::Map<const RowMat<S>> gout_n(grad_out.data() + n * g.o * hw_out, g.o, hw_out);
    gb += gout_n.rowwise().sum();
    if (is_pointwise(g, spec)) {
      Eigen::Map<const RowMat<S>> x_n(x.data() + n * g.c * hw_in, g.c, hw_in);
      gw.noalias() += gout_n * x_n.transpose();
      Eigen::Map<RowMat<S>>(grads.x.data() + n * g.c * hw_in, g.c, hw_in).noalias() = kernel.transpose() * gout_n;
    } else {
      im2col(x.data() + n * g.c * hw_in, g, spec, col);
      gw.noalias() += gout_n * col.transpose();
      gcol.noalias() = kernel.transpose() * gout_n;
      col2im_add(gcol, g, spec, grads.x.data() + n * g.c * hw_in);
    }
  }
  return grads;
}

template <typename S>
TensorT<S> relu_forward(const TensorT<S>& x) {
  TensorT<S> out = x;
  out.array() = out.array().max(S(0));
  return out;
}

template <typename S>
TensorT<S> relu_backward(const TensorT<S>& x, const TensorT<S>& grad_out) {
  if (!x.same_shape(grad_out)) throw InvalidArgument("relu backward: shape mismatch");
  TensorT<S> out(x.shape());
  out.array() = (x.array() > S(0)).select(grad_out.array(), S(0));
  return out;
}

template <typename S>
TensorT<S> upsample2x_forward(const TensorT<S>& x) {
  require_rank4(x, "upsample");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const auto ty = upsample_taps(h), tx = upsample_taps(w);
  TensorT<S> out({n, c, 2 * h, 2 * w});
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      for (int oy = 0; oy < 2 * h; ++oy) {
        const Tap& a = ty[oy];
        for (int ox = 0; ox < 2 * w; ++ox) {
          const Tap& t = tx[ox];
          const S top = x.at(b, ch, a.i0, t.i0) * S(1 - t.f) + x.at(b, ch, a.i0, t.i1) * S(t.f);
          const S bot = x.at(b, ch, a.i1, t.i0) * S(1 - t.f) + x.at(b, ch, a.i1, t.i1) * S(t.f);
          out.at(b, ch, oy, ox) = top * S(1 - a.f) + bot * S(a.f);
        }
      }
    }
  }
  return out;
}

template <typename S>
TensorT<S> upsample2x_backward(const TensorT<S>& grad_out) {
  require_rank4(grad_out, "upsample backward");
  const int n = grad_out.dim(0), c = grad_out.dim(1), h = grad_out.dim(2) / 2, w = grad_out.dim(3) / 2;
  if (grad_out.dim(2) != 2 * h || grad_out.dim(3) != 2 * w) throw InvalidArgument("upsample backward: odd extent");
  const auto ty = upsample_taps(h), tx = upsample_taps(w);
  TensorT<S> gx({n, c, h, w});
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      for (int oy = 0; oy < 2 * h; ++oy) {
        const Tap& a = ty[oy];
        for (int ox = 0; ox < 2 * w; ++ox) {
          const Tap& t = tx[ox];
          const S g = grad_out.at(b, ch, oy, ox);
          gx.at(b, ch, a.i0, t.i0) += g * S((1 - a.f) * (1 - t.f));
          gx.at(b, ch, a.i0, t.i1) += g * S((1 - a.f) * t.f);
          gx.at(b, ch, a.i1, t.i0) += g * S(a.f * (1 - t.f));
          gx.at(b, ch, a.i1, t.i1) += g * S(a.f * t.f);
        }
      }
    }
  }
  return gx;
}

template <typename S>
TensorT<S> concat_channels(const std::vector<const TensorT<S>*>& parts) {
  if (parts.empty()) throw InvalidArgument("concat: no inputs");
  const TensorT<S>& first = *parts.front();
  require_rank4(first, "concat");
  int channels = 0;
  for (const TensorT<S>* p : parts) {
    require_rank4(*p, "concat");
    if (p->dim(0) != first.dim(0) || p->dim(2) != first.dim(2) || p->dim(3) != first.dim(3)) {
      throw InvalidArgument("concat: incompatible shapes " + first.shape_string() + " and " + p->shape_string());
    }
    channels += p->dim(1);
  }
  const int n = first.dim(0);
  const size_t plane = static_cast<size_t>(first.dim(2)) * first.dim(3);
  TensorT<S> out({n, channels, first.dim(2), first.dim(3)});
  for (int b = 0; b < n; ++b) {
    S* dst = out.data() + static_cast<size_t>(b) * channels * plane;
    for (const TensorT<S>* p : parts) {
      const size_t len = static_cast<size_t>(p->dim(1)) * plane;
      std::copy_n(p->data() + b * len, len, dst);
      dst += len;
    }
  }
  return out;
}

template <typename S>
std::vector<TensorT<S>> split_channels(const TensorT<S>& t, const std::vector<int>& channels) {
  require_rank4(t, "split");
  int total = 0;
  for (int c : channels) total += c;
  if (total != t.dim(1)) throw InvalidArgument("split: channel counts do not sum to " + std::to_string(t.dim(1)));
  const int n = t.dim(0);
  const size_t plane = static_cast<size_t>(t.dim(2)) * t.dim(3);
  std::vector<TensorT<S>> out;
  for (int c : channels) out.emplace_back(std::vector<int>{n, c, t.dim(2), t.dim(3)});
  for (int b = 0; b < n; ++b) {
    const S* src = t.data() + static_cast<size_t>(b) * t.dim(1) * plane;
    for (size_t i = 0; i < channels.size(); ++i) {
      const size_t len = static_cast<size_t>(channels[i]) * plane;
      std::copy_n(src, len, out[i].data() + b * len);
      src += len;
    }
  }
  return out;
}

template <typename S>
TensorT<S> batchnorm_forward_train(const TensorT<S>& x, const TensorT<S>& gamma, const TensorT<S>& beta,
                                   BatchNormCache<S>& cache) {
  require_rank4(x, "batchnorm");
  const int n = x.dim(0), c = x.dim(1);
  require_channel_vector(gamma, c, "gamma");
  require_channel_vector(beta, c, "beta");
  const size_t plane = static_cast<size_t>(x.dim(2)) * x.dim(3);
  const double count = static_cast<double>(n) * plane;
  cache.xhat = TensorT<S>(x.shape());
  cache.mean.assign(c, S(0));
  cache.var.assign(c, S(0));
  cache.inv_std.assign(c, S(0));
  TensorT<S> y(x.shape());
  for (int ch = 0; ch < c; ++ch) {
    double sum = 0.0;
    for (int b = 0; b < n; ++b) {
      const S* p = x.data() + (static_cast<size_t>(b) * c + ch) * plane;
      for (size_t i = 0; i < plane; ++i) sum += p[i];
    }
    const double mean = sum / count;
    double sq = 0.0;
    for (int b = 0; b < n; ++b) {
      const S* p = x.data() + (static_cast<size_t>(b) * c + ch) * plane;
      for (size_t i = 0; i < plane; ++i) sq += (p[i] - mean) * (p[i] - mean);
    }
    const double var = sq / count;
    const double inv_std = 1.0 / std::sqrt(var + kBatchNormEps);
    cache.mean[ch] = S(mean);
    cache.var[ch] = S(var);
    cache.inv_std[ch] = S(inv_std);
    for (int b = 0; b < n; ++b) {
      const size_t off = (static_cast<size_t>(b) * c + ch) * plane;
      for (size_t i = 0; i < plane; ++i) {
        const S xh = S((x.data()[off + i] - mean) * inv_std);
        cache.xhat.data()[off + i] = xh;
        y.data()[off + i] = gamma[ch] * xh + beta[ch];
      }
    }
  }
  return y;
}

template <typename S>
BatchNormGrads<S> batchnorm_backward_train(const BatchNormCache<S>& cache, const TensorT<S>& gamma,
                                           const TensorT<S>& grad_out) {
  const TensorT<S>& xhat = cache.xhat;
  if (!xhat.same_shape(grad_out)) throw InvalidArgument("batchnorm backward: shape mismatch");
  const int n = xhat.dim(0), c = xhat.dim(1);
  const size_t plane = static_cast<size_t>(xhat.dim(2)) * xhat.dim(3);
  const double count = static_cast<double>(n) * plane;
  BatchNormGrads<S> g{TensorT<S>(xhat.shape()), TensorT<S>({c}), TensorT<S>({c})};
  for (int ch = 0; ch < c; ++ch) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (int b = 0; b < n; ++b) {
      const size_t off = (static_cast<size_t>(b) * c + ch) * plane;
      for (size_t i = 0; i < plane; ++i) {
        sum_g += grad_out.data()[off + i];
        sum_gx += grad_out.data()[off + i] * xhat.data()[off + i];
      }
    }
    g.gamma[ch] = S(sum_gx);
    g.beta[ch] = S(sum_g);
    const double scale = gamma[ch] * cache.inv_std[ch] / count;
    for (int b = 0; b < n; ++b) {
      const size_t off = (static_cast<size_t>(b) * c + ch) * plane;
      for (size_t i = 0; i < plane; ++i) {
        g.x.data()[off + i] =
            S(scale * (count * grad_out.data()[off + i] - sum_g - xhat.data()[off + i] * sum_gx));
      }
    }
  }
  return g;
}

template <typename S>
TensorT<S> batchnorm_forward_infer(const TensorT<S>& x, const TensorT<S>& gamma, const TensorT<S>& beta,
                                   const TensorT<S>& mean, const TensorT<S>& var) {
  require_rank4(x, "batchnorm");
  const int n = x.dim(0), c = x.dim(1);
  for (const auto* v : {&gamma, &beta, &mean, &var}) require_channel_vector(*v, c, "parameter");
  const size_t plane = static_cast<size_t>(x.dim(2)) * x.dim(3);
  TensorT<S> y(x.shape());
  for (int ch = 0; ch < c; ++ch) {
    const S scale = S(gamma[ch] / std::sqrt(var[ch] + kBatchNormEps));
    const S shift = beta[ch] - scale * mean[ch];
    for (int b = 0; b < n; ++b) {
      const size_t off = (static_cast<size_t>(b) * c + ch) * plane;
      for (size_t i = 0; i < plane; ++i) y.data()[off + i] = scale * x.data()[off + i] + shift;
    }
  }
  return y;
}

template <typename S>
BatchNormGrads<S> batchnorm_backward_infer(const TensorT<S>& x, const TensorT<S>& gamma, const TensorT<S>& mean,
                                           const TensorT<S>& var, const TensorT<S>& grad_out) {
  if (!x.same_shape(grad_out)) throw InvalidArgument("batchnorm backward: shape mismatch");
  const int n = x.dim(0), c = x.dim(1);
  const size_t plane = static_cast<size_t>(x.dim(2)) * x.dim(3);
  BatchNormGrads<S> g{TensorT<S>(x.shape()), TensorT<S>({c}), TensorT<S>({c})};
  for (int ch = 0; ch < c; ++ch) {
    const double inv_std = 1.0 / std::sqrt(var[ch] + kBatchNormEps);
    double sum_g = 0.0, sum_gx = 0.0;
    for (int b = 0; b < n; ++b) {
      const size_t off = (static_cast<size_t>(b) * c + ch) * plane;
      for (size_t i = 0; i < plane; ++i) {
        const double go = grad_out.data()[off + i];
        sum_g += go;
        sum_gx += go * (x.data()[off + i] - mean[ch]) * inv_std;
        g.x.data()[off + i] = S(go * gamma[ch] * inv_std);
      }
    }
    g.gamma[ch] = S(sum_gx);
    g.beta[ch] = S(sum_g);
  }
  return g;
}

template <typename S>
double bce_loss(const TensorT<S>& y, const TensorT<S>& z) {
  if (y.size() != z.size()) {
    throw InvalidArgument("bce: label " + y.shape_string() + " and logits " + z.shape_string() + " differ");
  }
  if (z.size() == 0) throw InvalidArgument("bce: empty input");
  double sum = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    const double zi = z[i], yi = y[i];
    sum += std::max(zi, 0.0) - zi * yi + std::log1p(std::exp(-std::abs(zi)));
  }
  return sum / static_cast<double>(z.size());
}

template <typename S>
TensorT<S> bce_grad(const TensorT<S>& y, const TensorT<S>& z) {
  if (y.size() != z.size()) {
    throw InvalidArgument("bce: label " + y.shape_string() + " and logits " + z.shape_string() + " differ");
  }
  TensorT<S> g(z.shape());
  const double inv_n = 1.0 / static_cast<double>(z.size());
  for (size_t i = 0; i < z.size(); ++i) g[i] = S((sigmoid<double>(z[i]) - y[i]) * inv_n);
  return g;
}

Tensor mask_to_tensor(const BinaryMask& mask) {
  Tensor t({height_of(mask), width_of(mask)});
  for (Eigen::Index i = 0; i < mask.size(); ++i) t[static_cast<size_t>(i)] = mask.data()[i] ? 1.0f : 0.0f;
  return t;
}

double bce_loss(const BinaryMask& y, const Tensor& z) {
  if (static_cast<size_t>(y.size()) != z.size()) {
    throw InvalidArgument("bce: mask has " + std::to_string(y.size()) + " pixels, logits " + z.shape_string());
  }
  return bce_loss(mask_to_tensor(y), z);
}

Tensor bce_grad(const BinaryMask& y, const Tensor& z) {
  if (static_cast<size_t>(y.size()) != z.size()) {
    throw InvalidArgument("bce: mask has " + std::to_string(y.size()) + " pixels, logits " + z.shape_string());
  }
  Tensor target = mask_to_tensor(y);
  Tensor g = bce_grad(target, z);
  return g;
}

double cosine_lr(int step, int total_steps, double lr_max, double lr_min) {
  if (total_steps < 1) throw InvalidArgument("cosine_lr: total_steps must be >= 1");
  if (step < 0 || step > total_steps) throw InvalidArgument("cosine_lr: step outside [0, total_steps]");
  if (step == 0) return lr_max;
  if (step == total_steps) return lr_min;
  if (2 * step == total_steps) return lr_min + 0.5 * (lr_max - lr_min);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * step / total_steps));
}

#define DEEPDETECT_INSTANTIATE(S)                                                                              \
  template TensorT<S> conv2d_forward(const TensorT<S>&, const TensorT<S>&, const TensorT<S>&, const ConvSpec&); \
  template ConvGrads<S> conv2d_backward(const TensorT<S>&, const TensorT<S>&, const TensorT<S>&, const ConvSpec&); \
  template TensorT<S> relu_forward(const TensorT<S>&);                                                         \
  template TensorT<S> relu_backward(const TensorT<S>&, const TensorT<S>&);                                     \
  template TensorT<S> upsample2x_forward(const TensorT<S>&);                                                   \
  template TensorT<S> upsample2x_backward(const TensorT<S>&);                                                  \
  template TensorT<S> concat_channels(const std::vector<const TensorT<S>*>&);                                  \
  template std::vector<TensorT<S>> split_channels(const TensorT<S>&, const std::vector<int>&);                 \
  template TensorT<S> batchnorm_forward_train(const TensorT<S>&, const TensorT<S>&, const TensorT<S>&,          \
                                              BatchNormCache<S>&);                                             \
  template BatchNormGrads<S> batchnorm_backward_train(const BatchNormCache<S>&, const TensorT<S>&,             \
                                                      const TensorT<S>&);                                      \
  template TensorT<S> batchnorm_forward_infer(const TensorT<S>&, const TensorT<S>&, const TensorT<S>&,          \
                                              const TensorT<S>&, const TensorT<S>&);                           \
  template BatchNormGrads<S> batchnorm_backward_infer(const TensorT<S>&, const TensorT<S>&, const TensorT<S>&, \
                                                      const TensorT<S>&, const TensorT<S>&);                   \
  template double bce_loss(const TensorT<S>&, const TensorT<S>&);                                              \
  template TensorT<S> bce_grad(const TensorT<S>&, const TensorT<S>&);

DEEPDETECT_INSTANTIATE(float)
DEEPDETECT_INSTANTIATE(double)

#undef DEEPDETECT_INSTANTIATE

}  // namespace deepdetect
