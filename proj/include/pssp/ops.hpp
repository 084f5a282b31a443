#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pssp/random.hpp"
#include "pssp/tensor.hpp"
#include "pssp/tokenizer.hpp"

namespace pssp::nn {

// Forward operations and their hand-derived backward passes. Every backward
// takes the upstream gradient of a scalar objective with respect to the
// forward output and returns gradients with respect to the inputs.

struct MatmulGrads {
  Tensor a;
  Tensor b;
};

/// [m x k] * [k x n] -> [m x n]. Throws ShapeMismatch.
Tensor matmul(const Tensor& a, const Tensor& b);
/// grad_a = grad_out * b^T, grad_b = a^T * grad_out.
MatmulGrads matmul_backward(const Tensor& a, const Tensor& b, const Tensor& grad_out);

/// x[rows x in] * w[in x out] + bias[out].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);

/// Adds d/dw and d/dbias into `grad_w` / `grad_bias` and returns d/dx.
Tensor linear_backward(const Tensor& x, const Tensor& w, const Tensor& grad_y, Tensor& grad_w, Tensor& grad_bias);

/// Row-wise softmax over the last dimension with max subtraction.
Tensor softmax_rows(const Tensor& x);
/// Takes the softmax output `y`.
Tensor softmax_rows_backward(const Tensor& y, const Tensor& grad_y);

inline constexpr double kLayerNormEps = 1e-5;

struct LayerNormCache {
  Tensor normalized;            // (x - mean) * inv_std
  std::vector<double> inv_std;  // one per row
};

struct LayerNormGrads {
  Tensor x;
  Tensor gamma;
  Tensor beta;
};

/// Per-row normalisation over the last dimension:
/// y = gamma * (x - mean) / sqrt(var + eps) + beta, with biased variance.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = kLayerNormEps,
                  LayerNormCache* cache = nullptr);
LayerNormGrads layer_norm_backward(const LayerNormCache& cache, const Tensor& gamma, const Tensor& grad_y);

Tensor relu(const Tensor& x);
/// Subgradient 0 at x == 0.
Tensor relu_backward(const Tensor& x, const Tensor& grad_y);

/// Gathers rows of `table` [V x d]. Throws IndexOutOfRange.
Tensor embedding_forward(std::span<const TokenId> ids, const Tensor& table);
/// Scatter-adds rows of `grad_y` into `grad_table`; repeated ids accumulate.
void embedding_backward(std::span<const TokenId> ids, const Tensor& grad_y, Tensor& grad_table);

/// PE[pos, 2i] = sin(pos / 10000^(2i/d)), PE[pos, 2i+1] = cos(same angle).
/// Throws OddDimension when d_model is odd.
Tensor positional_encoding(std::size_t max_len, std::size_t d_model);

struct AttentionResult {
  Tensor output;   // [L x dh]
  Tensor weights;  // [L x L], zero in masked key columns
};

struct AttentionGrads {
  Tensor q;
  Tensor k;
  Tensor v;
};

/// softmax(q k^T / sqrt(dh) + bias) v where keys with key_mask == 0 get a
/// bias of -inf. Throws ShapeMismatch, and MalformedInput if every key is
/// masked.
AttentionResult scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                     std::span<const std::uint8_t> key_mask);
AttentionGrads scaled_dot_attention_backward(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& weights,
                                             const Tensor& grad_out);

struct LossResult {
  double loss = 0.0;    // mean over counted rows
  Tensor grad_logits;   // same shape as logits, zero on ignored rows
  std::size_t count = 0;
  std::size_t correct = 0;  // argmax hits among counted rows
};

/// Mean negative log-likelihood of integer labels under softmax(logits),
/// skipping rows labelled `ignore`. Throws AllIgnored if nothing remains and
/// IndexOutOfRange for labels outside [0, classes).
LossResult sparse_ce_loss(const Tensor& logits, std::span<const std::int32_t> labels,
                          std::int32_t ignore = kIgnoreLabel);

/// Inverted dropout: kept entries are scaled by 1/(1-rate). `keep` receives
/// the per-element multiplier (0 or 1/(1-rate)). rate == 0 copies `x`.
Tensor dropout(const Tensor& x, double rate, Rng& rng, std::vector<double>& keep);
Tensor dropout_backward(const Tensor& grad_y, const std::vector<double>& keep);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> row) noexcept;

}  // namespace pssp::nn
