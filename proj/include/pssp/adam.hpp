#pragma once

#include <cstdint>

#include "pssp/tensor.hpp"

namespace pssp::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool operator==(const AdamConfig&) const = default;
};

/// Optimizer state for one parameter tensor.
struct AdamState {
  Tensor m;
  Tensor v;
  std::int64_t t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_param(const Tensor& param, const AdamConfig& config = {});
};

/// Bias-corrected Adam update:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,  t <- t + 1
///   param <- param - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
/// Throws ShapeMismatch.
void adam_step(Tensor& param, const Tensor& grad, AdamState& state);

}  // namespace pssp::nn
