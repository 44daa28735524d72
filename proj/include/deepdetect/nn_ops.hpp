#pragma once

#include "deepdetect/image.hpp"
#include "deepdetect/tensor.hpp"

#include <vector>

namespace deepdetect {

// Zero-padded cross-correlation geometry; square kernels only.
struct ConvSpec {
  int stride = 1;
  int dilation = 1;
  int padding = 0;
};

// x: N x C x H x W, w: O x C x k x k, b: O.
// Output extent: (H + 2 padding - dilation (k - 1) - 1) / stride + 1.
template <typename S>
TensorT<S> conv2d_forward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& b, const ConvSpec& spec);

template <typename S>
struct ConvGrads {
  TensorT<S> x, w, b;
};

template <typename S>
ConvGrads<S> conv2d_backward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& grad_out,
                             const ConvSpec& spec);

template <typename S>
TensorT<S> relu_forward(const TensorT<S>& x);
template <typename S>
TensorT<S> relu_backward(const TensorT<S>& x, const TensorT<S>& grad_out);

// x2 bilinear upsampling with half-pixel centers and edge clamping.
template <typename S>
TensorT<S> upsample2x_forward(const TensorT<S>& x);
template <typename S>
TensorT<S> upsample2x_backward(const TensorT<S>& grad_out);

template <typename S>
TensorT<S> concat_channels(const std::vector<const TensorT<S>*>& parts);
template <typename S>
std::vector<TensorT<S>> split_channels(const TensorT<S>& t, const std::vector<int>& channels);

// Per-channel normalization over batch and space followed by a learned affine.
inline constexpr double kBatchNormEps = 1e-5;

template <typename S>
struct BatchNormCache {
  TensorT<S> xhat;
  std::vector<S> mean, var, inv_std;
};

template <typename S>
struct BatchNormGrads {
  TensorT<S> x, gamma, beta;
};

template <typename S>
TensorT<S> batchnorm_forward_train(const TensorT<S>& x, const TensorT<S>& gamma, const TensorT<S>& beta,
                                   BatchNormCache<S>& cache);
template <typename S>
BatchNormGrads<S> batchnorm_backward_train(const BatchNormCache<S>& cache, const TensorT<S>& gamma,
                                           const TensorT<S>& grad_out);

template <typename S>
TensorT<S> batchnorm_forward_infer(const TensorT<S>& x, const TensorT<S>& gamma, const TensorT<S>& beta,
                                   const TensorT<S>& mean, const TensorT<S>& var);
template <typename S>
BatchNormGrads<S> batchnorm_backward_infer(const TensorT<S>& x, const TensorT<S>& gamma, const TensorT<S>& mean,
                                           const TensorT<S>& var, const TensorT<S>& grad_out);

// Mean binary cross-entropy over all elements, evaluated as
// max(z, 0) - z y + log(1 + exp(-|z|)). y holds {0, 1}.
template <typename S>
double bce_loss(const TensorT<S>& y, const TensorT<S>& z);
// dL/dz_i = (sigmoid(z_i) - y_i) / N.
template <typename S>
TensorT<S> bce_grad(const TensorT<S>& y, const TensorT<S>& z);

// Mask overloads: z must hold H x W elements.
double bce_loss(const BinaryMask& y, const Tensor& z);
Tensor bce_grad(const BinaryMask& y, const Tensor& z);

Tensor mask_to_tensor(const BinaryMask& mask);

template <typename S>
S sigmoid(S z) {
  return z >= 0 ? S(1) / (S(1) + std::exp(-z)) : std::exp(z) / (S(1) + std::exp(z));
}

// lr_min + (lr_max - lr_min) (1 + cos(pi step / total)) / 2, for 0 <= step <= total.
double cosine_lr(int step, int total_steps, double lr_max, double lr_min);

}  // namespace deepdetect
