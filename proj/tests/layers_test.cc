#include "sensprune/layers.h"

#include <gtest/gtest.h>

#include <vector>

#include "test_util.h"

namespace sensprune {
namespace {

using testing::dot;
using testing::numeric_gradient;
using testing::random_tensor;
using testing::random_vector;
using testing::relative_error;
using Tensor = BasicTensor4<double>;

constexpr double kGradTol = 1e-3;

// Straight seven-loop convolution used as the forward oracle.
Tensor naive_conv(const Tensor& x, const std::vector<double>& w, const std::vector<double>& b,
                  const ConvGeometry& g) {
  const Shape4 s = x.shape();
  const int ho = (s.h + 2 * g.pad - g.kernel) / g.stride + 1;
  const int wo = (s.w + 2 * g.pad - g.kernel) / g.stride + 1;
  Tensor y({s.n, g.out_ch, ho, wo});
  for (int n = 0; n < s.n; ++n)
    for (int o = 0; o < g.out_ch; ++o)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          double acc = b.empty() ? 0.0 : b[o];
          for (int c = 0; c < s.c; ++c)
            for (int ky = 0; ky < g.kernel; ++ky)
              for (int kx = 0; kx < g.kernel; ++kx) {
                const int iy = oy * g.stride - g.pad + ky;
                const int ix = ox * g.stride - g.pad + kx;
                if (iy < 0 || iy >= s.h || ix < 0 || ix >= s.w) continue;
                acc += w[((o * s.c + c) * g.kernel + ky) * g.kernel + kx] * x.at(n, c, iy, ix);
              }
          y.at(n, o, oy, ox) = acc;
        }
  return y;
}

struct ConvCase {
  Shape4 input;
  ConvGeometry geometry;
};

class ConvTest : public ::testing::TestWithParam<ConvCase> {};

TEST_P(ConvTest, ForwardMatchesNaiveLoops) {
  const auto [shape, g] = GetParam();
  const Tensor x = random_tensor(shape, 1);
  const auto w = random_vector(static_cast<std::size_t>(g.out_ch) * g.in_ch * g.kernel * g.kernel, 2);
  const auto b = g.bias ? random_vector(g.out_ch, 3) : std::vector<double>{};
  Tensor y;
  layers::conv2d_forward<double>(x, w, b, g, y);
  const Tensor expect = naive_conv(x, w, b, g);
  ASSERT_EQ(y.shape(), expect.shape());
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y.raw()[i], expect.raw()[i], 1e-5);

  // The float kernel agrees too.
  BasicTensor4<float> xf(shape);
  for (std::size_t i = 0; i < x.size(); ++i) xf.raw()[i] = static_cast<float>(x.raw()[i]);
  const std::vector<float> wf(w.begin(), w.end());
  const std::vector<float> bf(b.begin(), b.end());
  BasicTensor4<float> yf;
  layers::conv2d_forward<float>(xf, wf, bf, g, yf);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(yf.raw()[i], expect.raw()[i], 1e-5);
}

TEST_P(ConvTest, GradientsMatchFiniteDifferences) {
  const auto [shape, g] = GetParam();
  Tensor x = random_tensor(shape, 4);
  auto w = random_vector(static_cast<std::size_t>(g.out_ch) * g.in_ch * g.kernel * g.kernel, 5);
  auto b = g.bias ? random_vector(g.out_ch, 6) : std::vector<double>{};
  Tensor y;
  layers::conv2d_forward<double>(x, w, b, g, y);
  const auto r = random_vector(y.size(), 7);
  auto loss = [&] {
    Tensor out;
    layers::conv2d_forward<double>(x, w, b, g, out);
    return dot(out.data(), r);
  };
  Tensor dy(y.shape(), r);
  Tensor dx;
  std::vector<double> dw(w.size(), 0.0), db(b.size(), 0.0);
  layers::conv2d_backward<double>(x, w, g, dy, &dx, dw, db);
  EXPECT_LE(relative_error(dx.data(), numeric_gradient(x.data(), loss)), kGradTol);
  EXPECT_LE(relative_error(dw, numeric_gradient(w, loss)), kGradTol);
  if (g.bias) {
    EXPECT_LE(relative_error(db, numeric_gradient(b, loss)), kGradTol);
  }

  // Reusing the forward pass's column matrix gives the same gradients.
  std::vector<double> columns;
  layers::conv2d_forward<double>(x, w, b, g, y, &columns);
  Tensor dx2;
  std::vector<double> dw2(w.size(), 0.0), db2(b.size(), 0.0);
  layers::conv2d_backward<double>(x, w, g, dy, &dx2, dw2, db2, &columns);
  EXPECT_EQ(dx2.storage(), dx.storage());
  EXPECT_EQ(dw2, dw);
}

INSTANTIATE_TEST_SUITE_P(
    Shapes, ConvTest,
    ::testing::Values(ConvCase{{2, 4, 8, 8}, {4, 3, 3, 1, 1, true}},
                      ConvCase{{2, 4, 8, 8}, {4, 5, 3, 2, 1, false}},
                      ConvCase{{1, 3, 7, 6}, {3, 2, 1, 1, 0, true}},
                      ConvCase{{2, 2, 5, 5}, {2, 3, 3, 1, 0, true}},
                      ConvCase{{2, 1, 6, 6}, {1, 2, 5, 1, 2, true}}));

TEST(BatchNorm, TrainGradientsMatchFiniteDifferences) {
  const Shape4 s{3, 4, 5, 5};
  Tensor x = random_tensor(s, 11);
  auto gamma = random_vector(s.c, 12, 0.5, 1.5);
  auto beta = random_vector(s.c, 13);
  const auto r = random_vector(s.count(), 14);
  auto forward = [&](Tensor& y, layers::BatchNormCache<double>& cache) {
    std::vector<double> mean, var;
    layers::batchnorm_forward_train<double>(x, gamma, beta, y, cache, mean, var);
  };
  auto loss = [&] {
    Tensor y;
    layers::BatchNormCache<double> cache;
    forward(y, cache);
    return dot(y.data(), r);
  };
  Tensor y;
  layers::BatchNormCache<double> cache;
  forward(y, cache);
  Tensor dx;
  std::vector<double> dgamma(s.c, 0.0), dbeta(s.c, 0.0);
  layers::batchnorm_backward<double>(Tensor(s, r), gamma, cache, dx, dgamma, dbeta);
  EXPECT_LE(relative_error(dx.data(), numeric_gradient(x.data(), loss)), kGradTol);
  EXPECT_LE(relative_error(dgamma, numeric_gradient(gamma, loss)), kGradTol);
  EXPECT_LE(relative_error(dbeta, numeric_gradient(beta, loss)), kGradTol);
}

TEST(BatchNorm, TrainOutputIsNormalizedPerChannel) {
  const Shape4 s{4, 3, 3, 3};
  const Tensor x = random_tensor(s, 15);
  const std::vector<double> gamma(s.c, 1.0), beta(s.c, 0.0);
  Tensor y;
  layers::BatchNormCache<double> cache;
  std::vector<double> mean, var;
  layers::batchnorm_forward_train<double>(x, gamma, beta, y, cache, mean, var);
  for (int c = 0; c < s.c; ++c) {
    double m = 0.0, q = 0.0;
    for (int n = 0; n < s.n; ++n)
      for (int h = 0; h < s.h; ++h)
        for (int w = 0; w < s.w; ++w) m += y.at(n, c, h, w);
    m /= s.n * s.h * s.w;
    for (int n = 0; n < s.n; ++n)
      for (int h = 0; h < s.h; ++h)
        for (int w = 0; w < s.w; ++w) q += (y.at(n, c, h, w) - m) * (y.at(n, c, h, w) - m);
    q /= s.n * s.h * s.w;
    EXPECT_NEAR(m, 0.0, 1e-9);
    EXPECT_NEAR(q * (var[c] + layers::kBatchNormEps) / var[c], 1.0, 1e-6);
  }
}

TEST(BatchNorm, EvalUsesRunningStatistics) {
  const Shape4 s{2, 2, 2, 2};
  const Tensor x = random_tensor(s, 16);
  const std::vector<double> gamma{2.0, 0.5}, beta{0.1, -0.3}, mean{0.2, -0.1}, var{4.0, 0.25};
  Tensor y;
  layers::batchnorm_forward_eval<double>(x, gamma, beta, mean, var, y);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int h = 0; h < s.h; ++h)
        for (int w = 0; w < s.w; ++w) {
          const double expect = gamma[c] * (x.at(n, c, h, w) - mean[c]) /
                                    std::sqrt(var[c] + layers::kBatchNormEps) +
                                beta[c];
          EXPECT_NEAR(y.at(n, c, h, w), expect, 1e-12);
        }
}

TEST(Relu, GradientMatchesFiniteDifferences) {
  const Shape4 s{2, 3, 4, 4};
  Tensor x = random_tensor(s, 21);
  // Keep samples away from the kink.
  for (double& v : x.storage()) v += v > 0 ? 0.01 : -0.01;
  const auto r = random_vector(s.count(), 22);
  auto loss = [&] {
    Tensor y;
    layers::relu_forward(x, y);
    return dot(y.data(), r);
  };
  Tensor dx;
  layers::relu_backward(x, Tensor(s, r), dx);
  EXPECT_LE(relative_error(dx.data(), numeric_gradient(x.data(), loss)), kGradTol);
}

struct PoolCase {
  Shape4 input;
  PoolGeometry geometry;
};

class PoolTest : public ::testing::TestWithParam<PoolCase> {};

TEST_P(PoolTest, GradientMatchesFiniteDifferences) {
  const auto [s, g] = GetParam();
  // Distinct values so the argmax is stable under the probe step.
  Tensor x(s);
  auto perm = random_vector(s.count(), 31);
  for (std::size_t i = 0; i < x.size(); ++i) x.raw()[i] = perm[i] + 0.001 * static_cast<double>(i);
  Tensor y;
  std::vector<std::int32_t> argmax;
  layers::maxpool_forward(x, g, y, argmax);
  const auto r = random_vector(y.size(), 32);
  auto loss = [&] {
    Tensor out;
    std::vector<std::int32_t> am;
    layers::maxpool_forward(x, g, out, am);
    return dot(out.data(), r);
  };
  Tensor dx;
  layers::maxpool_backward(Tensor(y.shape(), r), argmax, s, dx);
  EXPECT_LE(relative_error(dx.data(), numeric_gradient(x.data(), loss, 1e-6)), kGradTol);
}

TEST_P(PoolTest, ForwardTakesWindowMaximum) {
  const auto [s, g] = GetParam();
  const Tensor x = random_tensor(s, 33);
  Tensor y;
  std::vector<std::int32_t> argmax;
  layers::maxpool_forward(x, g, y, argmax);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int oy = 0; oy < y.shape().h; ++oy)
        for (int ox = 0; ox < y.shape().w; ++ox) {
          double best = -1e300;
          for (int ky = 0; ky < g.size; ++ky)
            for (int kx = 0; kx < g.size; ++kx) {
              const int iy = oy * g.stride - g.pad + ky, ix = ox * g.stride - g.pad + kx;
              if (iy >= 0 && iy < s.h && ix >= 0 && ix < s.w) best = std::max(best, x.at(n, c, iy, ix));
            }
          EXPECT_EQ(y.at(n, c, oy, ox), best);
        }
}

INSTANTIATE_TEST_SUITE_P(Shapes, PoolTest,
                         ::testing::Values(PoolCase{{2, 3, 6, 6}, {2, 2, 0}},
                                           PoolCase{{1, 2, 7, 5}, {2, 2, 0}},
                                           PoolCase{{2, 2, 5, 5}, {3, 2, 1}},
                                           PoolCase{{1, 2, 4, 4}, {4, 4, 0}}));

TEST(Dense, GradientsMatchFiniteDifferences) {
  const Shape4 s{3, 2, 2, 3};
  const int out = 5;
  Tensor x = random_tensor(s, 41);
  auto w = random_vector(static_cast<std::size_t>(out) * s.per_sample(), 42);
  auto b = random_vector(out, 43);
  const auto r = random_vector(static_cast<std::size_t>(s.n) * out, 44);
  auto loss = [&] {
    Tensor y;
    layers::dense_forward<double>(x, w, b, out, y);
    return dot(y.data(), r);
  };
  Tensor dx;
  std::vector<double> dw(w.size(), 0.0), db(b.size(), 0.0);
  layers::dense_backward<double>(x, w, Tensor({s.n, out, 1, 1}, r), &dx, dw, db);
  EXPECT_LE(relative_error(dx.data(), numeric_gradient(x.data(), loss)), kGradTol);
  EXPECT_LE(relative_error(dw, numeric_gradient(w, loss)), kGradTol);
  EXPECT_LE(relative_error(db, numeric_gradient(b, loss)), kGradTol);
}

TEST(SoftmaxXent, GradientMatchesFiniteDifferences) {
  const Shape4 s{4, 6, 1, 1};
  Tensor logits = random_tensor(s, 51);
  for (double& v : logits.storage()) v *= 5.0;
  const std::vector<int> labels{0, 5, 2, 2};
  auto loss = [&] { return layers::softmax_xent<double>(logits, labels, nullptr); };
  Tensor grad;
  layers::softmax_xent<double>(logits, labels, &grad);
  EXPECT_LE(relative_error(grad.data(), numeric_gradient(logits.data(), loss)), kGradTol);
}

TEST(SoftmaxXent, StableForLargeLogits) {
  const Tensor logits({1, 3, 1, 1}, std::vector<double>{1000.0, 0.0, -1000.0});
  const std::vector<int> labels{0};
  EXPECT_NEAR(layers::softmax_xent<double>(logits, labels, nullptr), 0.0, 1e-12);
}

}  // namespace
}  // namespace sensprune
