#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pssp/augment.hpp"
#include "pssp/ops.hpp"
#include "pssp/tensor.hpp"

namespace pssp::model {

using nn::Tensor;

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t num_heads = 4;
  std::size_t num_blocks = 2;
  std::size_t ffn_dim = 128;
  std::size_t vocab_size = 22;
  std::size_t num_classes = 3;
  std::size_t max_len = kDefaultWindow;
  double dropout = 0.0;
  std::uint64_t seed = 42;

  /// Throws InvalidConfig.
  void validate() const;
  std::size_t head_dim() const noexcept { return d_model / num_heads; }
  bool operator==(const ModelConfig&) const = default;
};

struct BlockParams {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln1_gamma, ln1_beta;
  Tensor w1, b1, w2, b2;
  Tensor ln2_gamma, ln2_beta;
};

/// All learnable tensors of the encoder. `version` increases whenever an
/// optimizer mutates the tensors; forward passes record it so a backward on
/// stale activations is rejected.
struct Parameters {
  ModelConfig config;
  Tensor embedding;
  std::vector<BlockParams> blocks;
  Tensor head_w, head_b;
  std::uint64_t version = 0;

  /// Visits every tensor in a fixed order with a stable dotted name.
  void for_each(const std::function<void(const std::string&, Tensor&)>& fn);
  void for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const;

  std::size_t parameter_count() const;
  /// Same config and bitwise-equal tensors (version ignored).
  bool same_values(const Parameters& other) const;
};

struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
};

/// Names and shapes in for_each order.
std::vector<TensorSpec> parameter_manifest(const ModelConfig& config);

/// Glorot-uniform weights with limit sqrt(6 / (fan_in + fan_out)), zero
/// biases, unit gammas and zero betas. Fully determined by config.seed.
Parameters init_params(const ModelConfig& config);
Parameters zeros_like(const Parameters& params);

/// Tokens and masks for B windows of length L, row-major [B x L].
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<TokenId> tokens;
  std::vector<std::uint8_t> mask;
  std::vector<std::int32_t> labels;  // kIgnoreLabel at padded positions
};

TokenBatch make_batch(std::span<const WindowSample> windows);
TokenBatch make_batch(std::span<const WindowSample> windows, std::span<const std::size_t> indices);

enum class Mode { Train, Eval };
enum class Exec { Serial, Parallel };

struct BlockCache {
  Tensor input;
  Tensor q, k, v;
  std::vector<Tensor> attn_weights;  // one [L x L] per head
  Tensor attn_concat;
  std::vector<double> keep_attn;
  nn::LayerNormCache ln1;
  Tensor x1;
  Tensor hidden;
  Tensor hidden_relu;
  std::vector<double> keep_ffn;
  nn::LayerNormCache ln2;
};

struct SampleCache {
  std::vector<TokenId> tokens;
  std::vector<BlockCache> blocks;
  Tensor final_hidden;
};

/// Output of forward plus everything backward needs.
struct ForwardPass {
  Tensor logits;  // [B x L x num_classes]
  std::vector<SampleCache> samples;
  const Parameters* params = nullptr;
  std::uint64_t params_version = 0;
};

/// Embedding + positional encoding, num_blocks post-norm encoder blocks
///   x = LN(x + MHA(x)); x = LN(x + FFN(x))
/// and a linear head. Masked positions are never attended to as keys.
/// In Train mode with dropout > 0 the dropout masks are drawn from a stream
/// derived from (config.seed, dropout_stream, sample index).
/// Throws ShapeMismatch and IndexOutOfRange.
ForwardPass forward(const Parameters& params, const TokenBatch& batch, Mode mode = Mode::Eval,
                    Exec exec = Exec::Parallel, std::uint64_t dropout_stream = 0);

/// Gradients of a scalar objective with respect to every parameter, given its
/// gradient with respect to the logits. Per-sample gradients are reduced in
/// ascending sample order so Serial and Parallel agree bitwise.
/// Throws StaleCache when the parameters changed since the forward pass.
Parameters backward(const ForwardPass& pass, const Tensor& grad_logits, Exec exec = Exec::Parallel);

/// Same as backward but reuses `scratch` (one gradient buffer per sample) and
/// writes into `out`, which must match the parameter shapes.
void backward_into(const ForwardPass& pass, const Tensor& grad_logits, Exec exec, std::vector<Parameters>& scratch,
                   Parameters& out);

/// Softmax probabilities [B x L x num_classes].
Tensor predict_probs(const Parameters& params, const TokenBatch& batch, Exec exec = Exec::Parallel);

/// Argmax class per position (ties to the lower index); kIgnoreLabel at
/// masked positions. Row-major [B x L].
std::vector<std::int32_t> predict(const Parameters& params, const TokenBatch& batch, Exec exec = Exec::Parallel);

/// Argmax over logits with the same conventions as predict.
std::vector<std::int32_t> argmax_labels(const Tensor& logits, std::span<const std::uint8_t> mask);

}  // namespace pssp::model
