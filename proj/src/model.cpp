#include "pssp/model.hpp"

#include <algorithm>
#include <cmath>

#include "pssp/error.hpp"
#include "pssp/random.hpp"

namespace pssp::model {

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); };
  if (d_model == 0 || d_model % 2 != 0) fail("d_model must be a positive even integer");
  if (num_heads == 0 || d_model % num_heads != 0) fail("num_heads must divide d_model");
  if (num_blocks == 0) fail("num_blocks must be at least 1");
  if (ffn_dim == 0) fail("ffn_dim must be at least 1");
  if (vocab_size < 3) fail("vocab_size is too small");
  if (num_classes != kNumClasses) fail("num_classes must be 3");
  if (max_len == 0) fail("max_len must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
}

namespace {

template <typename P, typename Fn>
void visit(P& p, Fn&& fn) {
  fn(std::string("embedding"), p.embedding);
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    auto& blk = p.blocks[b];
    const std::string pre = "blocks." + std::to_string(b) + ".";
    fn(pre + "attn.wq", blk.wq);
    fn(pre + "attn.bq", blk.bq);
    fn(pre + "attn.wk", blk.wk);
    fn(pre + "attn.bk", blk.bk);
    fn(pre + "attn.wv", blk.wv);
    fn(pre + "attn.bv", blk.bv);
    fn(pre + "attn.wo", blk.wo);
    fn(pre + "attn.bo", blk.bo);
    fn(pre + "ln1.gamma", blk.ln1_gamma);
    fn(pre + "ln1.beta", blk.ln1_beta);
    fn(pre + "ffn.w1", blk.w1);
    fn(pre + "ffn.b1", blk.b1);
    fn(pre + "ffn.w2", blk.w2);
    fn(pre + "ffn.b2", blk.b2);
    fn(pre + "ln2.gamma", blk.ln2_gamma);
    fn(pre + "ln2.beta", blk.ln2_beta);
  }
  fn(std::string("head.w"), p.head_w);
  fn(std::string("head.b"), p.head_b);
}

Parameters shaped(const ModelConfig& c) {
  c.validate();
  Parameters p;
  p.config = c;
  const auto d = c.d_model, f = c.ffn_dim;
  p.embedding = Tensor({c.vocab_size, d});
  p.blocks.resize(c.num_blocks);
  for (auto& blk : p.blocks) {
    blk.wq = Tensor({d, d});
    blk.wk = Tensor({d, d});
    blk.wv = Tensor({d, d});
    blk.wo = Tensor({d, d});
    blk.bq = Tensor({d});
    blk.bk = Tensor({d});
    blk.bv = Tensor({d});
    blk.bo = Tensor({d});
    blk.ln1_gamma = Tensor({d});
    blk.ln1_beta = Tensor({d});
    blk.w1 = Tensor({d, f});
    blk.b1 = Tensor({f});
    blk.w2 = Tensor({f, d});
    blk.b2 = Tensor({d});
    blk.ln2_gamma = Tensor({d});
    blk.ln2_beta = Tensor({d});
  }
  p.head_w = Tensor({d, c.num_classes});
  p.head_b = Tensor({c.num_classes});
  return p;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Tensor slice_cols(const Tensor& x, std::size_t first, std::size_t width) {
  Tensor out({x.rows(), width});
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto src = x.row(r).subspan(first, width);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

void put_cols(Tensor& dst, std::size_t first, const Tensor& src) {
  for (std::size_t r = 0; r < src.rows(); ++r) {
    const auto s = src.row(r);
    std::copy(s.begin(), s.end(), dst.row(r).begin() + static_cast<std::ptrdiff_t>(first));
  }
}

void add_into(Tensor& dst, const Tensor& src) { dst += src; }

Tensor sum(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  out += b;
  return out;
}

}  // namespace

void Parameters::for_each(const std::function<void(const std::string&, Tensor&)>& fn) { visit(*this, fn); }

void Parameters::for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const {
  visit(*this, fn);
}

std::size_t Parameters::parameter_count() const {
  std::size_t n = 0;
  for_each([&n](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

bool Parameters::same_values(const Parameters& other) const {
  if (!(config == other.config)) return false;
  std::vector<const Tensor*> mine, theirs;
  for_each([&mine](const std::string&, const Tensor& t) { mine.push_back(&t); });
  other.for_each([&theirs](const std::string&, const Tensor& t) { theirs.push_back(&t); });
  if (mine.size() != theirs.size()) return false;
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (!(*mine[i] == *theirs[i])) return false;
  }
  return true;
}

std::vector<TensorSpec> parameter_manifest(const ModelConfig& config) {
  const Parameters p = shaped(config);
  std::vector<TensorSpec> out;
  p.for_each([&out](const std::string& name, const Tensor& t) { out.push_back({name, t.shape()}); });
  return out;
}

Parameters init_params(const ModelConfig& config) {
  Parameters p = shaped(config);
  Rng rng(derive_seed(config.seed, "init"));
  p.for_each([&rng](const std::string& name, Tensor& t) {
    if (ends_with(name, "gamma")) {
      t.fill(1.0);
    } else if (t.rank() == 2) {
      const double limit = std::sqrt(6.0 / static_cast<double>(t.dim(0) + t.dim(1)));
      for (auto& x : t.data()) x = uniform_real(rng, -limit, limit);
    } else {
      t.fill(0.0);
    }
  });
  return p;
}

Parameters zeros_like(const Parameters& params) {
  Parameters z = shaped(params.config);
  return z;
}

TokenBatch make_batch(std::span<const WindowSample> windows) {
  std::vector<std::size_t> idx(windows.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return make_batch(windows, idx);
}

TokenBatch make_batch(std::span<const WindowSample> windows, std::span<const std::size_t> indices) {
  TokenBatch b;
  b.batch = indices.size();
  b.length = indices.empty() ? 0 : windows[indices.front()].size();
  b.tokens.reserve(b.batch * b.length);
  b.mask.reserve(b.batch * b.length);
  b.labels.reserve(b.batch * b.length);
  for (auto i : indices) {
    const auto& w = windows[i];
    if (w.size() != b.length || w.labels.size() != b.length || w.mask.size() != b.length) {
      throw Error(ErrorKind::ShapeMismatch, "windows in a batch must share one length");
    }
    b.tokens.insert(b.tokens.end(), w.tokens.begin(), w.tokens.end());
    b.mask.insert(b.mask.end(), w.mask.begin(), w.mask.end());
    b.labels.insert(b.labels.end(), w.labels.begin(), w.labels.end());
  }
  return b;
}

namespace {

struct SampleInput {
  std::span<const TokenId> tokens;
  std::span<const std::uint8_t> mask;
};

void forward_sample(const Parameters& p, const SampleInput& in, const Tensor& pe, bool train, std::uint64_t seed,
                    SampleCache& cache, std::span<double> logits_out) {
  const auto& c = p.config;
  const auto len = in.tokens.size();
  const auto dh = c.head_dim();
  Rng rng(seed);
  const double rate = train ? c.dropout : 0.0;

  cache.tokens.assign(in.tokens.begin(), in.tokens.end());
  Tensor x = nn::embedding_forward(in.tokens, p.embedding);
  for (std::size_t r = 0; r < len; ++r) {
    auto xr = x.row(r);
    const auto pr = pe.row(r);
    for (std::size_t j = 0; j < c.d_model; ++j) xr[j] += pr[j];
  }

  cache.blocks.resize(p.blocks.size());
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const auto& blk = p.blocks[b];
    auto& bc = cache.blocks[b];
    bc.input = x;
    bc.q = nn::linear(x, blk.wq, blk.bq);
    bc.k = nn::linear(x, blk.wk, blk.bk);
    bc.v = nn::linear(x, blk.wv, blk.bv);
    bc.attn_concat = Tensor({len, c.d_model});
    bc.attn_weights.resize(c.num_heads);
    for (std::size_t h = 0; h < c.num_heads; ++h) {
      auto res = nn::scaled_dot_attention(slice_cols(bc.q, h * dh, dh), slice_cols(bc.k, h * dh, dh),
                                          slice_cols(bc.v, h * dh, dh), in.mask);
      put_cols(bc.attn_concat, h * dh, res.output);
      bc.attn_weights[h] = std::move(res.weights);
    }
    Tensor attn = nn::dropout(nn::linear(bc.attn_concat, blk.wo, blk.bo), rate, rng, bc.keep_attn);
    bc.x1 = nn::layer_norm(sum(x, attn), blk.ln1_gamma, blk.ln1_beta, nn::kLayerNormEps, &bc.ln1);

    bc.hidden = nn::linear(bc.x1, blk.w1, blk.b1);
    bc.hidden_relu = nn::relu(bc.hidden);
    Tensor ffn = nn::dropout(nn::linear(bc.hidden_relu, blk.w2, blk.b2), rate, rng, bc.keep_ffn);
    x = nn::layer_norm(sum(bc.x1, ffn), blk.ln2_gamma, blk.ln2_beta, nn::kLayerNormEps, &bc.ln2);
  }
  cache.final_hidden = x;
  const Tensor logits = nn::linear(x, p.head_w, p.head_b);
  std::copy(logits.data().begin(), logits.data().end(), logits_out.begin());
}

void backward_sample(const Parameters& p, const SampleCache& cache, const Tensor& grad_logits, Parameters& g) {
  const auto& c = p.config;
  const auto dh = c.head_dim();
  const auto len = cache.tokens.size();

  Tensor dx = nn::linear_backward(cache.final_hidden, p.head_w, grad_logits, g.head_w, g.head_b);
  for (std::size_t bi = p.blocks.size(); bi-- > 0;) {
    const auto& blk = p.blocks[bi];
    const auto& bc = cache.blocks[bi];
    auto& gb = g.blocks[bi];

    auto ln2 = nn::layer_norm_backward(bc.ln2, blk.ln2_gamma, dx);
    add_into(gb.ln2_gamma, ln2.gamma);
    add_into(gb.ln2_beta, ln2.beta);
    Tensor d_ffn = nn::dropout_backward(ln2.x, bc.keep_ffn);
    Tensor d_hidden = nn::relu_backward(bc.hidden, nn::linear_backward(bc.hidden_relu, blk.w2, d_ffn, gb.w2, gb.b2));
    Tensor dx1 = nn::linear_backward(bc.x1, blk.w1, d_hidden, gb.w1, gb.b1);
    dx1 += ln2.x;

    auto ln1 = nn::layer_norm_backward(bc.ln1, blk.ln1_gamma, dx1);
    add_into(gb.ln1_gamma, ln1.gamma);
    add_into(gb.ln1_beta, ln1.beta);
    Tensor d_attn = nn::dropout_backward(ln1.x, bc.keep_attn);
    Tensor d_concat = nn::linear_backward(bc.attn_concat, blk.wo, d_attn, gb.wo, gb.bo);

    Tensor dq({len, c.d_model}), dk({len, c.d_model}), dv({len, c.d_model});
    for (std::size_t h = 0; h < c.num_heads; ++h) {
      auto ag = nn::scaled_dot_attention_backward(slice_cols(bc.q, h * dh, dh), slice_cols(bc.k, h * dh, dh),
                                                  slice_cols(bc.v, h * dh, dh), bc.attn_weights[h],
                                                  slice_cols(d_concat, h * dh, dh));
      put_cols(dq, h * dh, ag.q);
      put_cols(dk, h * dh, ag.k);
      put_cols(dv, h * dh, ag.v);
    }
    dx = ln1.x;
    dx += nn::linear_backward(bc.input, blk.wq, dq, gb.wq, gb.bq);
    dx += nn::linear_backward(bc.input, blk.wk, dk, gb.wk, gb.bk);
    dx += nn::linear_backward(bc.input, blk.wv, dv, gb.wv, gb.bv);
  }
  // Positional encoding is constant, so the embedding receives dx directly.
  nn::embedding_backward(cache.tokens, dx, g.embedding);
}

void zero(Parameters& g) {
  g.for_each([](const std::string&, Tensor& t) { t.fill(0.0); });
}

std::vector<Tensor*> tensor_list(Parameters& p) {
  std::vector<Tensor*> out;
  p.for_each([&out](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

}  // namespace

ForwardPass forward(const Parameters& params, const TokenBatch& batch, Mode mode, Exec exec,
                    std::uint64_t dropout_stream) {
  const auto& c = params.config;
  if (batch.length > c.max_len || batch.tokens.size() != batch.batch * batch.length ||
      batch.mask.size() != batch.tokens.size()) {
    throw Error(ErrorKind::ShapeMismatch, "batch of " + std::to_string(batch.batch) + "x" +
                                              std::to_string(batch.length) + " does not fit max_len " +
                                              std::to_string(c.max_len));
  }
  for (auto t : batch.tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= c.vocab_size) {
      throw Error(ErrorKind::IndexOutOfRange, "token id " + std::to_string(t) + " outside the vocabulary");
    }
  }

  ForwardPass pass;
  pass.params = &params;
  pass.params_version = params.version;
  pass.logits = Tensor({batch.batch, batch.length, c.num_classes});
  pass.samples.resize(batch.batch);
  const Tensor pe = nn::positional_encoding(batch.length, c.d_model);
  const bool train = mode == Mode::Train;
  const std::uint64_t stream_seed = derive_seed(c.seed, "dropout", dropout_stream);

  const auto n = static_cast<std::ptrdiff_t>(batch.batch);
  const auto stride = batch.length;
  const auto out_stride = batch.length * c.num_classes;
  auto run = [&](std::ptrdiff_t i) {
    const auto s = static_cast<std::size_t>(i);
    SampleInput in{std::span<const TokenId>(batch.tokens).subspan(s * stride, stride),
                   std::span<const std::uint8_t>(batch.mask).subspan(s * stride, stride)};
    forward_sample(params, in, pe, train, derive_seed(stream_seed, "sample", s), pass.samples[s],
                   pass.logits.data().subspan(s * out_stride, out_stride));
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) run(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) run(i);
  }
  return pass;
}

void backward_into(const ForwardPass& pass, const Tensor& grad_logits, Exec exec, std::vector<Parameters>& scratch,
                   Parameters& out) {
  if (pass.params == nullptr || pass.params->version != pass.params_version) {
    throw Error(ErrorKind::StaleCache, "parameters changed since the forward pass");
  }
  const Parameters& p = *pass.params;
  require_same_shape(pass.logits, grad_logits, "logit gradient");
  const auto batch = pass.samples.size();
  const auto len = batch ? pass.samples.front().tokens.size() : 0;
  const auto classes = p.config.num_classes;

  if (scratch.size() < batch) scratch.resize(batch);
  for (std::size_t s = 0; s < batch; ++s) {
    if (scratch[s].blocks.size() != p.blocks.size() || !(scratch[s].config == p.config)) {
      scratch[s] = zeros_like(p);
    }
  }
  if (out.blocks.size() != p.blocks.size() || !(out.config == p.config)) out = zeros_like(p);

  auto run = [&](std::ptrdiff_t i) {
    const auto s = static_cast<std::size_t>(i);
    zero(scratch[s]);
    Tensor g({len, classes});
    const auto src = grad_logits.data().subspan(s * len * classes, len * classes);
    std::copy(src.begin(), src.end(), g.data().begin());
    backward_sample(p, pass.samples[s], g, scratch[s]);
  };
  const auto n = static_cast<std::ptrdiff_t>(batch);
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) run(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) run(i);
  }

  // Ascending-sample reduction; each element is summed in the same order on
  // either path.
  auto dst = tensor_list(out);
  std::vector<std::vector<Tensor*>> parts(batch);
  for (std::size_t s = 0; s < batch; ++s) parts[s] = tensor_list(scratch[s]);
  const auto tensors = static_cast<std::ptrdiff_t>(dst.size());
  auto reduce = [&](std::ptrdiff_t ti) {
    const auto t = static_cast<std::size_t>(ti);
    auto d = dst[t]->data();
    for (std::size_t e = 0; e < d.size(); ++e) {
      double acc = 0.0;
      for (std::size_t s = 0; s < batch; ++s) acc += (*parts[s][t])[e];
      d[e] = acc;
    }
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t t = 0; t < tensors; ++t) reduce(t);
  } else {
    for (std::ptrdiff_t t = 0; t < tensors; ++t) reduce(t);
  }
}

Parameters backward(const ForwardPass& pass, const Tensor& grad_logits, Exec exec) {
  if (pass.params == nullptr) throw Error(ErrorKind::StaleCache, "backward without a forward pass");
  std::vector<Parameters> scratch;
  Parameters out = zeros_like(*pass.params);
  backward_into(pass, grad_logits, exec, scratch, out);
  return out;
}

Tensor predict_probs(const Parameters& params, const TokenBatch& batch, Exec exec) {
  const auto pass = forward(params, batch, Mode::Eval, exec);
  Tensor probs = nn::softmax_rows(pass.logits);
  return probs;
}

std::vector<std::int32_t> argmax_labels(const Tensor& logits, std::span<const std::uint8_t> mask) {
  const auto rows = logits.rows();
  if (mask.size() != rows) throw Error(ErrorKind::ShapeMismatch, "mask does not match logit rows");
  std::vector<std::int32_t> out(rows, kIgnoreLabel);
  for (std::size_t r = 0; r < rows; ++r) {
    if (mask[r]) out[r] = static_cast<std::int32_t>(nn::argmax(logits.row(r)));
  }
  return out;
}

std::vector<std::int32_t> predict(const Parameters& params, const TokenBatch& batch, Exec exec) {
  const auto pass = forward(params, batch, Mode::Eval, exec);
  return argmax_labels(pass.logits, batch.mask);
}

}  // namespace pssp::model
