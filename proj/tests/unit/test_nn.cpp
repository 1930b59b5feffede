#include <gtest/gtest.h>

#include <cmath>

#include "mose/nn.hpp"

using namespace mose;

TEST(ParamStore, SlotsAreContiguousAndViewsAlias) {
  ParamStore s;
  const int a = s.add("a", 2, 3);
  const int b = s.add("b", 4, 1);
  EXPECT_EQ(s.size(), 10u);
  EXPECT_EQ(s.slot(b).offset, 6u);
  EXPECT_EQ(s.find("b"), b);
  EXPECT_EQ(s.find("missing"), -1);
  s(a)(1, 2) = 7.0;
  EXPECT_EQ(s.values()[5], 7.0);
  std::vector<double> g = s.zeros();
  s.view(std::span<double>(g), b)(3, 0) = 2.0;
  EXPECT_EQ(g[9], 2.0);
}

TEST(Activation, ValuesAndGradients) {
  EXPECT_EQ(activate(Activation::relu, -2.0), 0.0);
  EXPECT_EQ(activate(Activation::relu, 3.0), 3.0);
  EXPECT_EQ(activate_grad(Activation::relu, -1.0), 0.0);
  EXPECT_EQ(activate_grad(Activation::relu, 1.0), 1.0);
  EXPECT_NEAR(activate_grad(Activation::tanh, 0.3), 1 - std::tanh(0.3) * std::tanh(0.3), 1e-15);
  EXPECT_EQ(activate(Activation::identity, -4.5), -4.5);
}

TEST(FeedForward, InitializationHasZeroBiases) {
  ParamStore s;
  FeedForward ff(s, "ff", 5, 7, 3);
  Rng rng(1);
  ff.initialize(s, rng);
  EXPECT_TRUE(s(s.find("ff.b1")).isZero());
  EXPECT_TRUE(s(s.find("ff.b2")).isZero());
  EXPECT_FALSE(s(s.find("ff.w1")).isZero());
}

TEST(FeedForward, BackwardMatchesFiniteDifferences) {
  ParamStore s;
  FeedForward ff(s, "ff", 4, 6, 3);
  Rng rng(2);
  ff.initialize(s, rng);
  std::normal_distribution<double> n(0.0, 0.5);
  for (double& v : s.values()) v += 0.1 * n(rng);  // move biases off zero so ReLU units are not on the kink
  Vector x(4), dy(3);
  for (int i = 0; i < 4; ++i) x[i] = n(rng);
  for (int i = 0; i < 3; ++i) dy[i] = n(rng);

  FeedForward::Cache cache;
  ff.forward(s, x, 0.0, nullptr, &cache);
  std::vector<double> grads = s.zeros();
  const Vector dx = ff.backward(s, cache, dy, grads);

  auto loss = [&](const Vector& in) { return dy.dot(ff.forward(s, in, 0.0, nullptr, nullptr)); };
  const double h = 1e-6;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double keep = s.values()[i];
    s.values()[i] = keep + h;
    const double up = loss(x);
    s.values()[i] = keep - h;
    const double down = loss(x);
    s.values()[i] = keep;
    EXPECT_NEAR(grads[i], (up - down) / (2 * h), 1e-7) << "parameter " << i;
  }
  for (int i = 0; i < 4; ++i) {
    Vector a = x, b = x;
    a[i] += h;
    b[i] -= h;
    EXPECT_NEAR(dx[i], (loss(a) - loss(b)) / (2 * h), 1e-7);
  }
}

TEST(FeedForward, DropoutOnlyWithRng) {
  ParamStore s;
  FeedForward ff(s, "ff", 3, 50, 2);
  Rng rng(4);
  ff.initialize(s, rng);
  const Vector x = Vector::Ones(3);
  const Vector a = ff.forward(s, x, 0.5, nullptr, nullptr);
  const Vector b = ff.forward(s, x, 0.5, nullptr, nullptr);
  EXPECT_EQ(a, b);
  FeedForward::Cache c;
  Rng drop(9);
  ff.forward(s, x, 0.5, &drop, &c);
  int zeros = 0;
  for (Eigen::Index i = 0; i < c.mask.size(); ++i) {
    EXPECT_TRUE(c.mask[i] == 0.0 || c.mask[i] == 2.0);
    zeros += c.mask[i] == 0.0;
  }
  EXPECT_GT(zeros, 5);
  EXPECT_LT(zeros, 45);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Adam opt(3, {.learning_rate = 0.01});
  std::vector<double> p{1.0, 2.0, 3.0};
  const std::vector<double> g{0.5, -4.0, 0.0};
  opt.step(p, g);
  EXPECT_NEAR(p[0], 0.99, 1e-9);
  EXPECT_NEAR(p[1], 2.01, 1e-9);
  EXPECT_EQ(p[2], 3.0);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, ZeroLearningRateLeavesParameters) {
  Adam opt(2, {.learning_rate = 0.0});
  std::vector<double> p{1.5, -2.5};
  for (int i = 0; i < 5; ++i) opt.step(p, std::vector<double>{1.0, -3.0});
  EXPECT_EQ(p, (std::vector<double>{1.5, -2.5}));
}
