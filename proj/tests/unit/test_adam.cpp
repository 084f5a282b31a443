#include <gtest/gtest.h>

#include <cmath>

#include "pssp/adam.hpp"
#include "pssp/error.hpp"

namespace pssp::nn {
namespace {

TEST(Adam, ZeroGradLeavesParamAndAdvancesStep) {
  Tensor p({3}, std::vector<double>{1, -2, 3});
  const auto before = p;
  auto state = AdamState::for_param(p);
  adam_step(p, Tensor({3}), state);
  EXPECT_EQ(p, before);
  EXPECT_EQ(state.t, 1);
}

TEST(Adam, FirstStepMovesByLrTimesSign) {
  Tensor p({4}, std::vector<double>{0, 0, 0, 0});
  const Tensor g({4}, std::vector<double>{3.0, -0.5, 1e-2, -7.0});
  auto state = AdamState::for_param(p);
  adam_step(p, g, state);
  for (std::size_t i = 0; i < 4; ++i) {
    // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
    const double expected = -1e-3 * g[i] / (std::abs(g[i]) + 1e-8);
    EXPECT_NEAR(p[i], expected, 1e-15);
    EXPECT_NEAR(std::abs(p[i]), 1e-3, 1e-8);
  }
}

TEST(Adam, ThreeStepsDecreaseQuadratic) {
  Tensor x({1}, 1.0);
  auto state = AdamState::for_param(x, {.lr = 0.1});
  double f = x[0] * x[0];
  for (int i = 0; i < 3; ++i) {
    adam_step(x, Tensor({1}, 2.0 * x[0]), state);
    const double next = x[0] * x[0];
    EXPECT_LT(next, f);
    f = next;
  }
  EXPECT_EQ(state.t, 3);
}

TEST(Adam, MatchesClosedFormRecurrence) {
  Tensor p({2}, std::vector<double>{0.3, -0.1});
  auto state = AdamState::for_param(p);
  double m[2] = {0, 0}, v[2] = {0, 0}, x[2] = {0.3, -0.1};
  const double grads[3][2] = {{0.5, -1.0}, {0.2, 0.4}, {-0.3, 0.1}};
  for (int t = 1; t <= 3; ++t) {
    adam_step(p, Tensor({2}, std::vector<double>{grads[t - 1][0], grads[t - 1][1]}), state);
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * grads[t - 1][i];
      v[i] = 0.999 * v[i] + 0.001 * grads[t - 1][i] * grads[t - 1][i];
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      x[i] -= 1e-3 * mh / (std::sqrt(vh) + 1e-8);
      EXPECT_NEAR(p[i], x[i], 1e-15);
    }
  }
}

TEST(Adam, ShapeMismatch) {
  Tensor p({2});
  auto state = AdamState::for_param(p);
  try {
    adam_step(p, Tensor({3}), state);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
}

}  // namespace
}  // namespace pssp::nn
