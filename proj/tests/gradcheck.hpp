#pragma once

#include "deepdetect/random.hpp"
#include "deepdetect/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace deepdetect::testing {

using TensorD = TensorT<double>;

inline TensorD random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  TensorD t(std::move(shape));
  for (auto& v : t.values()) v = scale * rng.normal();
  return t;
}

inline double dot(const TensorD& a, const TensorD& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct GradCheck {
  double rel_error = 0.0;
  size_t checked = 0;
};

// Central differences of loss() with respect to entries of `param`, compared
// with `analytic` as ||a - n|| / max(||a||, ||n||, floor) over the probed
// entries. Tensors larger than max_probes are sampled.
template <typename Loss>
GradCheck check_gradient(TensorD& param, const TensorD& analytic, Loss loss, double eps = 1e-3,
                         size_t max_probes = 64, uint64_t seed = 7, double floor = 1e-7) {
  std::vector<size_t> idx(param.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  if (idx.size() > max_probes) {
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(max_probes);
  }
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (size_t i : idx) {
    const double keep = param[i];
    param[i] = keep + eps;
    const double up = loss();
    param[i] = keep - eps;
    const double down = loss();
    param[i] = keep;
    const double numeric = (up - down) / (2 * eps);
    diff += (numeric - analytic[i]) * (numeric - analytic[i]);
    na += analytic[i] * analytic[i];
    nn += numeric * numeric;
  }
  return {std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), floor}), idx.size()};
}

// Value plus the sign pattern of every ReLU input seen while computing it.
struct PiecewiseEval {
  double loss = 0.0;
  std::vector<bool> pattern;
};

inline std::vector<bool> activation_pattern(const std::vector<TensorD>& relu_inputs) {
  std::vector<bool> p;
  for (const TensorD& t : relu_inputs)
    for (double v : t.values()) p.push_back(v > 0.0);
  return p;
}

struct PiecewiseCheck {
  double rel_error = 0.0;
  size_t checked = 0;
  size_t skipped = 0;
};

// check_gradient for piecewise-smooth maps: a probe whose +-eps evaluations
// change the activation pattern straddles a kink, where central differences
// do not estimate the derivative, and is skipped.
template <typename Eval>
PiecewiseCheck check_gradient_piecewise(TensorD& param, const TensorD& analytic, Eval eval, double eps = 1e-3,
                                        size_t max_probes = 64, uint64_t seed = 7, double floor = 1e-7) {
  std::vector<size_t> idx(param.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  if (idx.size() > max_probes) {
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(max_probes);
  }
  const std::vector<bool> base = eval().pattern;
  PiecewiseCheck out;
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (size_t i : idx) {
    const double keep = param[i];
    param[i] = keep + eps;
    const PiecewiseEval up = eval();
    param[i] = keep - eps;
    const PiecewiseEval down = eval();
    param[i] = keep;
    if (up.pattern != base || down.pattern != base) {
      ++out.skipped;
      continue;
    }
    ++out.checked;
    const double numeric = (up.loss - down.loss) / (2 * eps);
    diff += (numeric - analytic[i]) * (numeric - analytic[i]);
    na += analytic[i] * analytic[i];
    nn += numeric * numeric;
  }
  out.rel_error = std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), floor});
  return out;
}

}  // namespace deepdetect::testing
