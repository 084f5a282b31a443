#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "gradcheck.hpp"
#include "pssp/error.hpp"
#include "pssp/ops.hpp"
#include "pssp/random.hpp"

namespace pssp::nn {
namespace {

using testing::max_gradient_error;

constexpr int kTrials = 20;
constexpr double kSmoothTol = 1e-6;
constexpr double kAttentionTol = 1e-5;

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& x : t.storage()) x = uniform_real(rng, -scale, scale);
  return t;
}

// Scalar objective sum(r * y) so that d/dy = r.
double dot(const Tensor& r, const Tensor& y) {
  return std::inner_product(r.data().begin(), r.data().end(), y.data().begin(), 0.0);
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::IoFailure;
}

TEST(Matmul, Examples) {
  const auto a = Tensor::matrix(2, 2, {1, 2, 3, 4});
  const auto b = Tensor::matrix(2, 2, {5, 6, 7, 8});
  EXPECT_EQ(matmul(a, b).storage(), (std::vector<double>{19, 22, 43, 50}));
  const auto eye = Tensor::matrix(2, 2, {1, 0, 0, 1});
  EXPECT_EQ(matmul(eye, a), a);
  EXPECT_EQ(kind_of([] { matmul(Tensor({2, 3}), Tensor({2, 3})); }), ErrorKind::ShapeMismatch);
}

TEST(Matmul, GradientCheck) {
  Rng rng(derive_seed(1, "matmul"));
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t m = 1 + uniform_index(rng, 5), k = 1 + uniform_index(rng, 5), n = 1 + uniform_index(rng, 5);
    auto a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng);
    const auto r = random_tensor({m, n}, rng);
    const auto g = matmul_backward(a, b, r);
    auto f = [&] { return dot(r, matmul(a, b)); };
    EXPECT_LT(max_gradient_error(f, a.data(), g.a.data()), kSmoothTol);
    EXPECT_LT(max_gradient_error(f, b.data(), g.b.data()), kSmoothTol);
  }
}

TEST(Linear, GradientCheck) {
  Rng rng(derive_seed(2, "linear"));
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t m = 1 + uniform_index(rng, 5), k = 1 + uniform_index(rng, 5), n = 1 + uniform_index(rng, 5);
    auto x = random_tensor({m, k}, rng), w = random_tensor({k, n}, rng), b = random_tensor({n}, rng);
    const auto r = random_tensor({m, n}, rng);
    Tensor gw({k, n}), gb({n});
    const auto gx = linear_backward(x, w, r, gw, gb);
    auto f = [&] { return dot(r, linear(x, w, b)); };
    EXPECT_LT(max_gradient_error(f, x.data(), gx.data()), kSmoothTol);
    EXPECT_LT(max_gradient_error(f, w.data(), gw.data()), kSmoothTol);
    EXPECT_LT(max_gradient_error(f, b.data(), gb.data()), kSmoothTol);
  }
}

TEST(Softmax, Examples) {
  const auto u = softmax_rows(Tensor::matrix(1, 3, {2, 2, 2}));
  for (double v : u.data()) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
  const auto s = softmax_rows(Tensor::matrix(1, 3, {1000, 0, -1000}));
  EXPECT_TRUE(s.all_finite());
  EXPECT_NEAR(s[0], 1.0, 1e-15);
  EXPECT_NEAR(s[1], 0.0, 1e-15);
}

TEST(Softmax, RowSumsAndShiftInvariance) {
  Rng rng(derive_seed(3, "softmax"));
  for (int t = 0; t < 100; ++t) {
    const std::size_t rows = 1 + uniform_index(rng, 6), cols = 1 + uniform_index(rng, 9);
    auto x = random_tensor({rows, cols}, rng, 20.0);
    const auto y = softmax_rows(x);
    auto shifted = x;
    const double c = uniform_real(rng, -50, 50);
    for (std::size_t r = 0; r < rows; ++r) {
      for (auto& v : shifted.row(r)) v += c;
    }
    const auto ys = softmax_rows(shifted);
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (double v : y.row(r)) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        sum += v;
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ys[i], 1e-12);
  }
}

TEST(Softmax, GradientCheck) {
  Rng rng(derive_seed(4, "softmax"));
  for (int t = 0; t < kTrials; ++t) {
    auto x = random_tensor({1 + uniform_index(rng, 4), 1 + uniform_index(rng, 6)}, rng, 3.0);
    const auto r = random_tensor(x.shape(), rng);
    const auto gx = softmax_rows_backward(softmax_rows(x), r);
    EXPECT_LT(max_gradient_error([&] { return dot(r, softmax_rows(x)); }, x.data(), gx.data()), kSmoothTol);
  }
}

TEST(LayerNorm, StatisticsOnNonConstantRows) {
  // With eps inside the square root the output variance is s2 / (s2 + eps)
  // for input variance s2, so "within 1e-6 of 1" needs s2 >= 10. Rows are
  // drawn wide enough for that, and the exact ratio is checked for all rows.
  Rng rng(derive_seed(5, "ln"));
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 2 + uniform_index(rng, 30);
    const auto x = random_tensor({4, d}, rng, t < 25 ? 50.0 : 0.5);
    const auto y = layer_norm(x, Tensor({d}, 1.0), Tensor({d}, 0.0));
    for (std::size_t r = 0; r < 4; ++r) {
      double in_mean = 0.0, in_var = 0.0;
      for (double v : x.row(r)) in_mean += v;
      in_mean /= static_cast<double>(d);
      for (double v : x.row(r)) in_var += (v - in_mean) * (v - in_mean);
      in_var /= static_cast<double>(d);
      double mean = 0.0, var = 0.0;
      for (double v : y.row(r)) mean += v;
      mean /= static_cast<double>(d);
      for (double v : y.row(r)) var += (v - mean) * (v - mean);
      var /= static_cast<double>(d);
      EXPECT_LT(std::abs(mean), 1e-12);
      EXPECT_NEAR(var, in_var / (in_var + kLayerNormEps), 1e-12);
      if (in_var >= 10.0) {
        EXPECT_NEAR(var, 1.0, 1e-6);
      }
    }
  }
}

TEST(LayerNorm, ConstantRowGivesBeta) {
  const auto beta = Tensor({4}, std::vector<double>{0.5, -1, 2, 0});
  const auto y = layer_norm(Tensor({1, 4}, 3.25), Tensor({4}, 2.0), beta);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(y[i], beta[i]);
}

TEST(LayerNorm, InvariantToAffineRescaling) {
  Rng rng(derive_seed(6, "ln"));
  auto x = random_tensor({3, 12}, rng, 2.0);
  const auto gamma = random_tensor({12}, rng), beta = random_tensor({12}, rng);
  auto scaled = x;
  for (auto& v : scaled.storage()) v = 4.0 * v + 7.0;
  // eps is tiny relative to the row variances, so outputs agree closely.
  const auto a = layer_norm(x, gamma, beta), b = layer_norm(scaled, gamma, beta);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-5);
}

TEST(LayerNorm, GradientCheck) {
  Rng rng(derive_seed(7, "ln"));
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t d = 1 + uniform_index(rng, 8);
    auto x = random_tensor({1 + uniform_index(rng, 4), d}, rng, 2.0);
    auto gamma = random_tensor({d}, rng), beta = random_tensor({d}, rng);
    const auto r = random_tensor(x.shape(), rng);
    LayerNormCache cache;
    layer_norm(x, gamma, beta, kLayerNormEps, &cache);
    const auto g = layer_norm_backward(cache, gamma, r);
    auto f = [&] { return dot(r, layer_norm(x, gamma, beta)); };
    EXPECT_LT(max_gradient_error(f, x.data(), g.x.data()), kSmoothTol);
    EXPECT_LT(max_gradient_error(f, gamma.data(), g.gamma.data()), kSmoothTol);
    EXPECT_LT(max_gradient_error(f, beta.data(), g.beta.data()), kSmoothTol);
  }
}

TEST(Relu, Examples) {
  const auto x = Tensor({3}, std::vector<double>{-1, 0, 2});
  EXPECT_EQ(relu(x).storage(), (std::vector<double>{0, 0, 2}));
  const auto g = relu_backward(Tensor({2}, std::vector<double>{-1, 2}), Tensor({2}, 5.0));
  EXPECT_EQ(g.storage(), (std::vector<double>{0, 5}));
  EXPECT_EQ(relu_backward(x, Tensor({3}, 1.0))[1], 0.0);
}

TEST(Relu, GradientCheckAwayFromZero) {
  Rng rng(derive_seed(8, "relu"));
  for (int t = 0; t < kTrials; ++t) {
    auto x = random_tensor({2, 1 + uniform_index(rng, 8)}, rng);
    for (auto& v : x.storage()) {
      if (std::abs(v) < 1e-3) v = 0.5;
    }
    const auto r = random_tensor(x.shape(), rng);
    const auto gx = relu_backward(x, r);
    EXPECT_LT(max_gradient_error([&] { return dot(r, relu(x)); }, x.data(), gx.data()), kSmoothTol);
  }
}

TEST(Embedding, RepeatedIdsAccumulate) {
  const auto table = Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6});
  const std::vector<TokenId> ids{0, 0};
  const auto y = embedding_forward(ids, table);
  EXPECT_EQ(y.storage(), (std::vector<double>{1, 2, 1, 2}));
  Tensor g({3, 2});
  embedding_backward(ids, Tensor::matrix(2, 2, {1, 1, 2, 3}), g);
  EXPECT_EQ(g.storage(), (std::vector<double>{3, 4, 0, 0, 0, 0}));
  EXPECT_EQ(embedding_forward(std::vector<TokenId>{}, table).size(), 0u);
  EXPECT_EQ(kind_of([&] { embedding_forward(std::vector<TokenId>{3}, table); }), ErrorKind::IndexOutOfRange);
  EXPECT_EQ(kind_of([&] { embedding_forward(std::vector<TokenId>{-1}, table); }), ErrorKind::IndexOutOfRange);
}

TEST(Embedding, GradientCheck) {
  Rng rng(derive_seed(9, "emb"));
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t v = 2 + uniform_index(rng, 5), d = 1 + uniform_index(rng, 4);
    auto table = random_tensor({v, d}, rng);
    std::vector<TokenId> ids(1 + uniform_index(rng, 7));
    for (auto& id : ids) id = static_cast<TokenId>(uniform_index(rng, v));
    const auto r = random_tensor({ids.size(), d}, rng);
    Tensor g({v, d});
    embedding_backward(ids, r, g);
    auto f = [&] { return dot(r, embedding_forward(ids, table)); };
    EXPECT_LT(max_gradient_error(f, table.data(), g.data()), kSmoothTol);
  }
}

TEST(PositionalEncoding, Examples) {
  const auto pe = positional_encoding(15, 8);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(pe.at(0, i), i % 2 == 0 ? 0.0 : 1.0);
  EXPECT_NEAR(pe.at(1, 0), 0.841471, 1e-6);
  EXPECT_DOUBLE_EQ(pe.at(1, 0), std::sin(1.0));
  for (double v : pe.data()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_DOUBLE_EQ(pe.at(3, 5), std::cos(3.0 / std::pow(10000.0, 4.0 / 8.0)));
  EXPECT_EQ(kind_of([] { positional_encoding(5, 7); }), ErrorKind::OddDimension);
}

TEST(Attention, SingleKeyReturnsValue) {
  Rng rng(derive_seed(10, "attn"));
  const auto q = random_tensor({1, 4}, rng), k = random_tensor({1, 4}, rng), v = random_tensor({1, 4}, rng);
  const std::vector<std::uint8_t> mask{1};
  EXPECT_EQ(scaled_dot_attention(q, k, v, mask).output, v);
}

TEST(Attention, OnlyUnmaskedKeyDeterminesOutput) {
  Rng rng(derive_seed(11, "attn"));
  const auto q = random_tensor({5, 3}, rng), k = random_tensor({5, 3}, rng), v = random_tensor({5, 3}, rng);
  const std::vector<std::uint8_t> mask{0, 0, 1, 0, 0};
  const auto out = scaled_dot_attention(q, k, v, mask).output;
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(out.at(r, c), v.at(2, c));
  }
  EXPECT_EQ(kind_of([&] { scaled_dot_attention(q, k, v, std::vector<std::uint8_t>(5, 0)); }),
            ErrorKind::MalformedInput);
  EXPECT_EQ(kind_of([&] { scaled_dot_attention(q, random_tensor({4, 3}, rng), v, mask); }),
            ErrorKind::ShapeMismatch);
}

TEST(Attention, WeightRowsSumToOneOverUnmaskedKeys) {
  Rng rng(derive_seed(12, "attn"));
  for (int t = 0; t < 50; ++t) {
    const std::size_t l = 1 + uniform_index(rng, 15);
    const auto q = random_tensor({l, 4}, rng, 3.0), k = random_tensor({l, 4}, rng, 3.0), v = random_tensor({l, 4}, rng);
    std::vector<std::uint8_t> mask(l);
    for (auto& m : mask) m = uniform_unit(rng) < 0.7;
    mask[uniform_index(rng, l)] = 1;
    const auto w = scaled_dot_attention(q, k, v, mask).weights;
    for (std::size_t r = 0; r < l; ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < l; ++c) {
        if (mask[c]) {
          sum += w.at(r, c);
        } else {
          EXPECT_EQ(w.at(r, c), 0.0);
        }
      }
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(Attention, GradientCheck) {
  Rng rng(derive_seed(13, "attn"));
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t l = t == 0 ? 4 : 1 + uniform_index(rng, 6);
    const std::size_t dh = t == 0 ? 8 : 1 + uniform_index(rng, 6);
    auto q = random_tensor({l, dh}, rng), k = random_tensor({l, dh}, rng), v = random_tensor({l, dh}, rng);
    std::vector<std::uint8_t> mask(l);
    for (auto& m : mask) m = uniform_unit(rng) < 0.75;
    mask[0] = 1;
    const auto r = random_tensor({l, dh}, rng);
    const auto res = scaled_dot_attention(q, k, v, mask);
    const auto g = scaled_dot_attention_backward(q, k, v, res.weights, r);
    auto f = [&] { return dot(r, scaled_dot_attention(q, k, v, mask).output); };
    EXPECT_LT(max_gradient_error(f, q.data(), g.q.data()), kAttentionTol);
    EXPECT_LT(max_gradient_error(f, k.data(), g.k.data()), kAttentionTol);
    EXPECT_LT(max_gradient_error(f, v.data(), g.v.data()), kAttentionTol);
  }
}

TEST(SparseCe, Examples) {
  const auto uniform = Tensor({2, 3}, 0.7);
  const std::vector<std::int32_t> labels{0, 2};
  EXPECT_NEAR(sparse_ce_loss(uniform, labels).loss, std::log(3.0), 1e-12);
  EXPECT_NEAR(sparse_ce_loss(uniform, labels).loss, 1.098612, 1e-6);
  const auto confident = Tensor::matrix(1, 3, {60, 0, 0});
  EXPECT_LT(sparse_ce_loss(confident, std::vector<std::int32_t>{0}).loss, 1e-20);
}

TEST(SparseCe, IgnoredRowsAndErrors) {
  Rng rng(derive_seed(14, "ce"));
  const auto logits = random_tensor({3, 3}, rng);
  const auto res = sparse_ce_loss(logits, std::vector<std::int32_t>{1, kIgnoreLabel, 2});
  EXPECT_EQ(res.count, 2u);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(res.grad_logits.at(1, c), 0.0);
  EXPECT_EQ(kind_of([&] { sparse_ce_loss(logits, std::vector<std::int32_t>(3, kIgnoreLabel)); }),
            ErrorKind::AllIgnored);
  EXPECT_EQ(kind_of([&] { sparse_ce_loss(logits, std::vector<std::int32_t>{0, 3, 1}); }),
            ErrorKind::IndexOutOfRange);
}

TEST(SparseCe, GradientCheck) {
  Rng rng(derive_seed(15, "ce"));
  for (int t = 0; t < kTrials; ++t) {
    const std::size_t n = 1 + uniform_index(rng, 8);
    auto logits = random_tensor({n, 3}, rng, 3.0);
    std::vector<std::int32_t> labels(n);
    for (auto& l : labels) l = uniform_unit(rng) < 0.2 ? kIgnoreLabel : static_cast<std::int32_t>(uniform_index(rng, 3));
    labels[0] = 1;
    const auto res = sparse_ce_loss(logits, labels);
    auto f = [&] { return sparse_ce_loss(logits, labels).loss; };
    EXPECT_LT(max_gradient_error(f, logits.data(), res.grad_logits.data()), kSmoothTol);
  }
}

TEST(Dropout, InvertedScalingAndBackward) {
  Rng rng(derive_seed(16, "drop"));
  const auto x = random_tensor({10, 10}, rng);
  std::vector<double> keep;
  const auto y = dropout(x, 0.5, rng, keep);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_TRUE(keep[i] == 0.0 || keep[i] == 2.0);
    EXPECT_DOUBLE_EQ(y[i], x[i] * keep[i]);
  }
  const auto g = dropout_backward(Tensor({10, 10}, 1.0), keep);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i], keep[i]);
  EXPECT_EQ(dropout(x, 0.0, rng, keep), x);
}

TEST(Argmax, TiesGoLow) {
  EXPECT_EQ(argmax(std::vector<double>{0.4, 0.4, 0.2}), 0u);
  EXPECT_EQ(argmax(std::vector<double>{0.1, 0.4, 0.4}), 1u);
  EXPECT_EQ(argmax(std::vector<double>{0.1, 0.2, 0.7}), 2u);
}

TEST(Ops, BitwiseDeterministic) {
  Rng rng(derive_seed(17, "det"));
  const auto q = random_tensor({6, 5}, rng), k = random_tensor({6, 5}, rng), v = random_tensor({6, 5}, rng);
  const std::vector<std::uint8_t> mask{1, 1, 0, 1, 1, 0};
  const auto a = scaled_dot_attention(q, k, v, mask), b = scaled_dot_attention(q, k, v, mask);
  EXPECT_EQ(a.output, b.output);
  EXPECT_EQ(a.weights, b.weights);
}

}  // namespace
}  // namespace pssp::nn
