#include "pssp/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pssp/error.hpp"
#include "pssp/kernels.hpp"

namespace pssp::nn {
namespace {

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw Error(ErrorKind::ShapeMismatch, std::string(what) + " must be a matrix, got " + shape_string(t.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul lhs");
  require_matrix(b, "matmul rhs");
  if (a.dim(1) != b.dim(0)) {
    throw Error(ErrorKind::ShapeMismatch, "matmul " + shape_string(a.shape()) + " * " + shape_string(b.shape()));
  }
  Tensor c({a.dim(0), b.dim(1)});
  kernels::gemm_nn(a.dim(0), a.dim(1), b.dim(1), a.data(), b.data(), c.data());
  return c;
}

MatmulGrads matmul_backward(const Tensor& a, const Tensor& b, const Tensor& grad_out) {
  require_matrix(grad_out, "matmul grad");
  const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (grad_out.dim(0) != m || grad_out.dim(1) != n || b.dim(0) != k) {
    throw Error(ErrorKind::ShapeMismatch, "matmul backward shapes do not agree");
  }
  MatmulGrads g{Tensor({m, k}), Tensor({k, n})};
  kernels::gemm_nt(m, n, k, grad_out.data(), b.data(), g.a.data());
  kernels::gemm_tn(k, m, n, a.data(), grad_out.data(), g.b.data());
  return g;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  require_matrix(w, "linear weight");
  if (x.cols() != w.dim(0) || bias.size() != w.dim(1)) {
    throw Error(ErrorKind::ShapeMismatch, "linear " + shape_string(x.shape()) + " * " + shape_string(w.shape()) +
                                              " + " + shape_string(bias.shape()));
  }
  const auto rows = x.rows(), in = w.dim(0), out = w.dim(1);
  Tensor y({rows, out});
  for (std::size_t r = 0; r < rows; ++r) {
    auto yr = y.row(r);
    std::copy(bias.data().begin(), bias.data().end(), yr.begin());
  }
  kernels::gemm_nn(rows, in, out, x.data(), w.data(), y.data(), /*accumulate=*/true);
  return y;
}

Tensor linear_backward(const Tensor& x, const Tensor& w, const Tensor& grad_y, Tensor& grad_w, Tensor& grad_bias) {
  const auto rows = x.rows(), in = w.dim(0), out = w.dim(1);
  if (grad_y.rows() != rows || grad_y.cols() != out) {
    throw Error(ErrorKind::ShapeMismatch, "linear backward gradient " + shape_string(grad_y.shape()));
  }
  require_same_shape(grad_w, w, "linear weight gradient");
  kernels::gemm_tn(in, rows, out, x.data(), grad_y.data(), grad_w.data(), /*accumulate=*/true);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto g = grad_y.row(r);
    for (std::size_t j = 0; j < out; ++j) grad_bias[j] += g[j];
  }
  Tensor dx({rows, in});
  kernels::gemm_nt(rows, out, in, grad_y.data(), w.data(), dx.data());
  return dx;
}

Tensor softmax_rows(const Tensor& x) {
  Tensor y = Tensor::zeros_like(x);
  const auto n = x.cols();
  if (n == 0) return y;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row(r);
    auto out = y.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[j] = std::exp(in[j] - mx);
      sum += out[j];
    }
    for (std::size_t j = 0; j < n; ++j) out[j] /= sum;
  }
  return y;
}

Tensor softmax_rows_backward(const Tensor& y, const Tensor& grad_y) {
  require_same_shape(y, grad_y, "softmax backward");
  Tensor dx = Tensor::zeros_like(y);
  const auto n = y.cols();
  for (std::size_t r = 0; r < y.rows(); ++r) {
    const auto yr = y.row(r);
    const auto gr = grad_y.row(r);
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) dot += yr[j] * gr[j];
    auto dr = dx.row(r);
    for (std::size_t j = 0; j < n; ++j) dr[j] = yr[j] * (gr[j] - dot);
  }
  return dx;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps, LayerNormCache* cache) {
  const auto d = x.cols();
  if (d == 0 || gamma.size() != d || beta.size() != d) {
    throw Error(ErrorKind::ShapeMismatch, "layer_norm over " + shape_string(x.shape()) + " with gamma " +
                                              shape_string(gamma.shape()) + " and beta " + shape_string(beta.shape()));
  }
  const auto rows = x.rows();
  Tensor y = Tensor::zeros_like(x);
  Tensor normalized = Tensor::zeros_like(x);
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto xr = x.row(r);
    double mean = 0.0;
    for (double v : xr) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : xr) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    auto nr = normalized.row(r);
    auto yr = y.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      nr[j] = (xr[j] - mean) * is;
      yr[j] = gamma[j] * nr[j] + beta[j];
    }
  }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

LayerNormGrads layer_norm_backward(const LayerNormCache& cache, const Tensor& gamma, const Tensor& grad_y) {
  require_same_shape(cache.normalized, grad_y, "layer_norm backward");
  const auto d = grad_y.cols();
  const auto rows = grad_y.rows();
  LayerNormGrads g{Tensor::zeros_like(grad_y), Tensor::zeros_like(gamma), Tensor::zeros_like(gamma)};
  std::vector<double> scaled(d);
  const double inv_d = 1.0 / static_cast<double>(d);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto gr = grad_y.row(r);
    const auto nr = cache.normalized.row(r);
    double sum = 0.0, sum_n = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      g.gamma[j] += gr[j] * nr[j];
      g.beta[j] += gr[j];
      scaled[j] = gr[j] * gamma[j];
      sum += scaled[j];
      sum_n += scaled[j] * nr[j];
    }
    auto dr = g.x.row(r);
    const double is = cache.inv_std[r];
    for (std::size_t j = 0; j < d; ++j) dr[j] = is * (scaled[j] - inv_d * sum - nr[j] * inv_d * sum_n);
  }
  return g;
}

Tensor relu(const Tensor& x) {
  Tensor y = Tensor::zeros_like(x);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_y) {
  require_same_shape(x, grad_y, "relu backward");
  Tensor dx = Tensor::zeros_like(x);
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? grad_y[i] : 0.0;
  return dx;
}

Tensor embedding_forward(std::span<const TokenId> ids, const Tensor& table) {
  require_matrix(table, "embedding table");
  const auto vocab = table.dim(0), d = table.dim(1);
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw Error(ErrorKind::IndexOutOfRange,
                  "token id " + std::to_string(ids[i]) + " outside table of " + std::to_string(vocab) + " rows");
    }
    const auto src = table.row(static_cast<std::size_t>(ids[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void embedding_backward(std::span<const TokenId> ids, const Tensor& grad_y, Tensor& grad_table) {
  const auto vocab = grad_table.dim(0), d = grad_table.dim(1);
  if (grad_y.rows() != ids.size() || (ids.size() > 0 && grad_y.cols() != d)) {
    throw Error(ErrorKind::ShapeMismatch, "embedding backward gradient " + shape_string(grad_y.shape()));
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw Error(ErrorKind::IndexOutOfRange, "token id " + std::to_string(ids[i]) + " outside embedding table");
    }
    auto dst = grad_table.row(static_cast<std::size_t>(ids[i]));
    const auto src = grad_y.row(i);
    for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
  }
}

Tensor positional_encoding(std::size_t max_len, std::size_t d_model) {
  if (d_model % 2 != 0) {
    throw Error(ErrorKind::OddDimension, "positional encoding needs an even model width, got " + std::to_string(d_model));
  }
  Tensor pe({max_len, d_model});
  for (std::size_t pos = 0; pos < max_len; ++pos) {
    for (std::size_t i = 0; i < d_model / 2; ++i) {
      const double angle =
          static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d_model));
      pe.at(pos, 2 * i) = std::sin(angle);
      pe.at(pos, 2 * i + 1) = std::cos(angle);
    }
  }
  return pe;
}

AttentionResult scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                     std::span<const std::uint8_t> key_mask) {
  require_matrix(q, "attention query");
  require_matrix(k, "attention key");
  require_matrix(v, "attention value");
  const auto lq = q.dim(0), lk = k.dim(0), dh = q.dim(1);
  if (dh == 0 || k.dim(1) != dh || v.dim(0) != lk || key_mask.size() != lk) {
    throw Error(ErrorKind::ShapeMismatch, "attention q " + shape_string(q.shape()) + " k " + shape_string(k.shape()) +
                                              " v " + shape_string(v.shape()) + " mask " +
                                              std::to_string(key_mask.size()));
  }
  if (std::none_of(key_mask.begin(), key_mask.end(), [](std::uint8_t m) { return m != 0; })) {
    throw Error(ErrorKind::MalformedInput, "attention with every key masked");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  AttentionResult res{Tensor({lq, v.dim(1)}), Tensor({lq, lk})};
  Tensor& w = res.weights;
  kernels::gemm_nt(lq, dh, lk, q.data(), k.data(), w.data());
  for (std::size_t i = 0; i < lq; ++i) {
    auto row = w.row(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < lk; ++j) {
      if (key_mask[j]) mx = std::max(mx, row[j] * scale);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < lk; ++j) {
      row[j] = key_mask[j] ? std::exp(row[j] * scale - mx) : 0.0;
      sum += row[j];
    }
    for (std::size_t j = 0; j < lk; ++j) row[j] /= sum;
  }
  kernels::gemm_nn(lq, lk, v.dim(1), w.data(), v.data(), res.output.data());
  return res;
}

AttentionGrads scaled_dot_attention_backward(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& weights,
                                             const Tensor& grad_out) {
  const auto lq = q.dim(0), lk = k.dim(0), dh = q.dim(1), dv = v.dim(1);
  if (weights.rows() != lq || weights.cols() != lk || grad_out.rows() != lq || grad_out.cols() != dv) {
    throw Error(ErrorKind::ShapeMismatch, "attention backward shapes do not agree");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  AttentionGrads g{Tensor::zeros_like(q), Tensor::zeros_like(k), Tensor::zeros_like(v)};

  Tensor grad_w({lq, lk});
  kernels::gemm_nt(lq, dv, lk, grad_out.data(), v.data(), grad_w.data());
  kernels::gemm_tn(lk, lq, dv, weights.data(), grad_out.data(), g.v.data());

  Tensor grad_s = softmax_rows_backward(weights, grad_w);
  for (auto& x : grad_s.data()) x *= scale;
  kernels::gemm_nn(lq, lk, dh, grad_s.data(), k.data(), g.q.data());
  kernels::gemm_tn(lk, lq, dh, grad_s.data(), q.data(), g.k.data());
  return g;
}

LossResult sparse_ce_loss(const Tensor& logits, std::span<const std::int32_t> labels, std::int32_t ignore) {
  const auto rows = logits.rows(), classes = logits.cols();
  if (labels.size() != rows) {
    throw Error(ErrorKind::ShapeMismatch, std::to_string(labels.size()) + " labels for " + std::to_string(rows) +
                                              " logit rows");
  }
  LossResult res;
  res.grad_logits = Tensor::zeros_like(logits);
  for (auto label : labels) {
    if (label == ignore) continue;
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw Error(ErrorKind::IndexOutOfRange, "label " + std::to_string(label) + " outside " +
                                                  std::to_string(classes) + " classes");
    }
    ++res.count;
  }
  if (res.count == 0) throw Error(ErrorKind::AllIgnored, "every row carries the ignore label");

  const double inv_count = 1.0 / static_cast<double>(res.count);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (labels[r] == ignore) continue;
    const auto x = logits.row(r);
    const auto label = static_cast<std::size_t>(labels[r]);
    const double mx = *std::max_element(x.begin(), x.end());
    double sum = 0.0;
    for (double v : x) sum += std::exp(v - mx);
    const double log_sum = mx + std::log(sum);
    total += log_sum - x[label];
    if (argmax(x) == label) ++res.correct;
    auto g = res.grad_logits.row(r);
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = std::exp(x[c] - log_sum);
      g[c] = (p - (c == label ? 1.0 : 0.0)) * inv_count;
    }
  }
  res.loss = total * inv_count;
  return res;
}

Tensor dropout(const Tensor& x, double rate, Rng& rng, std::vector<double>& keep) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorKind::InvalidConfig, "dropout rate must lie in [0, 1)");
  keep.assign(x.size(), 1.0);
  if (rate == 0.0) return x;
  const double scale = 1.0 / (1.0 - rate);
  Tensor y = Tensor::zeros_like(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    keep[i] = uniform_unit(rng) < rate ? 0.0 : scale;
    y[i] = x[i] * keep[i];
  }
  return y;
}

Tensor dropout_backward(const Tensor& grad_y, const std::vector<double>& keep) {
  if (keep.size() != grad_y.size()) throw Error(ErrorKind::ShapeMismatch, "dropout mask size");
  Tensor dx = Tensor::zeros_like(grad_y);
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = grad_y[i] * keep[i];
  return dx;
}

std::size_t argmax(std::span<const double> row) noexcept {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

}  // namespace pssp::nn
