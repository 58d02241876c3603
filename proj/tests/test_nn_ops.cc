#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "rawcsi/nn/gradcheck.h"
#include "rawcsi/nn/ops.h"
#include "rawcsi/nn/optimizer.h"
#include "test_util.h"

namespace rawcsi::nn {
namespace {

using rawcsi::testing::codeOf;

Tensor ramp(const Shape& shape, double start = 1.0, double step = 1.0) {
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t.flat(i) = start + step * static_cast<double>(i);
  return t;
}

TEST(Conv2d, FirstLayerSumsReAndIm) {
  const Tensor x({4, 3, 1}, 1.0);
  const Tensor k({2, 1, 1, 1}, {1, 1});
  const Tensor y = conv2dForward(x, k, Tensor({1}, 0.0), {2, 1}, Padding::kValid);
  EXPECT_EQ(y.shape(), (Shape{2, 3, 1}));
  for (double v : y.data()) EXPECT_EQ(v, 2.0);
}

TEST(Conv2d, UnitKernelIsIdentity) {
  const Tensor x = ramp({3, 4, 2});
  Tensor k({1, 1, 2, 2});
  k.at(0, 0, 0, 0) = 1.0;
  k.at(0, 0, 1, 1) = 1.0;
  EXPECT_EQ(conv2dForward(x, k, Tensor(), {1, 1}, Padding::kSame), x);
}

TEST(Conv2d, ReferenceCrossCorrelation) {
  // scipy.signal.correlate2d on arange(1, 13).reshape(3, 4) with [[1, 0], [-1, 2]].
  const Tensor x = ramp({3, 4, 1});
  const Tensor k({2, 2, 1, 1}, {1, 0, -1, 2});
  const Tensor valid = conv2dForward(x, k, Tensor(), {1, 1}, Padding::kValid);
  EXPECT_EQ(valid.shape(), (Shape{2, 3, 1}));
  EXPECT_EQ(valid.values(), (std::vector<double>{8, 10, 12, 16, 18, 20}));
  // same, stride 2: one padded row on the high side, none on columns
  const Tensor same = conv2dForward(x, k, Tensor(), {2, 2}, Padding::kSame);
  EXPECT_EQ(same.shape(), (Shape{2, 2, 1}));
  EXPECT_EQ(same.values(), (std::vector<double>{8, 12, 9, 11}));
}

TEST(Conv2d, Geometry) {
  const auto g = convGeometry(5, 5, {2, 3}, {2, 1}, Padding::kSame);
  EXPECT_EQ(g.outRows, 3u);
  EXPECT_EQ(g.outCols, 5u);
  EXPECT_EQ(g.padTop, 0u);
  EXPECT_EQ(g.padLeft, 1u);
  EXPECT_EQ(codeOf([] { convGeometry(2, 5, {3, 1}, {1, 1}, Padding::kValid); }), Errc::kKernelTooLarge);
}

TEST(BatchNorm, ConstantBatchMapsToZero) {
  const Tensor x({3, 2, 2, 1}, 5.0);
  RunningStats rs{Tensor({1}, 0.0), Tensor({1}, 1.0)};
  const Tensor y = batchNormForward(x, Tensor({1}, 1.0), Tensor({1}, 0.0), rs, Mode::kTrain);
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
  EXPECT_DOUBLE_EQ(rs.mean.flat(0), 0.5);
  EXPECT_DOUBLE_EQ(rs.var.flat(0), 0.9);
}

TEST(BatchNorm, ReferenceAndMoments) {
  // (x - 2.5) / sqrt(1.25 + 1e-5), frozen from numpy
  const Tensor x({2, 1, 2, 1}, {1, 2, 3, 4});
  BatchNormCache cache;
  const Tensor y = batchNormTrain(x, Tensor({1}, 1.0), Tensor({1}, 0.0), 1e-5, cache);
  const std::vector<double> expect{-1.3416354199689269, -0.447211806656309, 0.447211806656309, 1.3416354199689269};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(y.flat(i), expect[i], 1e-15);

  const Tensor r = ramp({4, 3, 2, 3}, -3.0, 0.37);
  const Tensor z = batchNormTrain(r, Tensor({3}, 1.0), Tensor({3}, 0.0), 1e-5, cache);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0, sq = 0;
    for (std::size_t i = c; i < z.size(); i += 3) mean += z.flat(i);
    mean /= 24.0;
    for (std::size_t i = c; i < z.size(); i += 3) sq += (z.flat(i) - mean) * (z.flat(i) - mean);
    EXPECT_NEAR(mean, 0.0, 1e-6);
    EXPECT_NEAR(sq / 24.0, 1.0, 1e-6);
  }
}

TEST(BatchNorm, AbsorbsGlobalScale) {
  const Tensor x = ramp({3, 2, 2, 2}, -1.3, 0.21);
  BatchNormCache c1, c2;
  const Tensor g({2}, {1.5, 0.5}), b({2}, {0.1, -0.2});
  const Tensor y1 = batchNormTrain(x, g, b, 1e-5, c1);
  const Tensor y2 = batchNormTrain(scale(x, 1000.0), g, b, 1e-5, c2);
  // eps only matters at the small scale; the gap is about |xhat| * eps / (2 var).
  for (std::size_t i = 0; i < y1.size(); ++i) EXPECT_NEAR(y1.flat(i), y2.flat(i), 1e-4);
}

TEST(BatchNorm, InferUsesRunningStatsAndNeedsTwoInTrain) {
  const Tensor x({1, 1, 1, 1}, {3.0});
  RunningStats rs{Tensor({1}, 1.0), Tensor({1}, 4.0)};
  const Tensor y = batchNormForward(x, Tensor({1}, 2.0), Tensor({1}, 1.0), rs, Mode::kInfer);
  EXPECT_NEAR(y.flat(0), 2.0 * 2.0 / std::sqrt(4.0 + 1e-5) + 1.0, 1e-15);
  EXPECT_EQ(rs.mean.flat(0), 1.0);
  EXPECT_EQ(codeOf([&] { batchNormForward(x, Tensor({1}, 1.0), Tensor({1}, 0.0), rs, Mode::kTrain); }),
            Errc::kBatchTooSmall);
}

TEST(AvgPool, Windows) {
  EXPECT_EQ(avgPoolForward(Tensor({2, 2, 1}, {1, 2, 3, 4}), {2, 2}).values(), (std::vector<double>{2.5}));
  const Tensor x = ramp({3, 4, 2});
  EXPECT_EQ(avgPoolForward(x, {1, 1}), x);
  EXPECT_EQ(avgPoolForward(Tensor({5, 2, 1}), {2, 1}).shape(), (Shape{2, 2, 1}));
  EXPECT_EQ(codeOf([] { avgPoolForward(Tensor({2, 2, 1}), {3, 1}); }), Errc::kPoolTooLarge);
}

TEST(Concat, Flatten) {
  const std::vector<Tensor> parts{Tensor({1, 2}, {1, 2}), Tensor({1, 1}, {3})};
  EXPECT_EQ(concatFlatten(parts).values(), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(concatFlatten(std::vector<Tensor>{Tensor({2, 2}, {4, 5, 6, 7})}).shape(), (Shape{4}));
  EXPECT_EQ(codeOf([] { concatFlatten(std::vector<Tensor>{}); }), Errc::kEmptyInput);
}

TEST(Dropout, ModesAndStatistics) {
  auto e = makeEngine(9, {1});
  const Tensor x = ramp({5, 7});
  EXPECT_EQ(dropoutForward(x, 0.8, Mode::kInfer, e), x);
  EXPECT_EQ(dropoutForward(x, 0.0, Mode::kTrain, e), x);
  const Tensor ones({1000000}, 1.0);
  const Tensor y = dropoutForward(ones, 0.8, Mode::kTrain, e);
  std::size_t survivors = 0;
  for (double v : y.data()) survivors += v != 0.0 ? 1 : 0;
  const double mean = std::accumulate(y.data().begin(), y.data().end(), 0.0) / 1e6;
  EXPECT_NEAR(static_cast<double>(survivors) / 1e6, 0.2, 0.005);
  EXPECT_NEAR(mean, 1.0, 0.01);
}

TEST(Dense, Forward) {
  const Tensor y = denseForward(Tensor({2}, {-1, 2}), identity(2), Tensor({2}, 0.0), Activation::kRelu);
  EXPECT_EQ(y.values(), (std::vector<double>{0, 2}));
  const Tensor b({3}, {0.5, -1, 2});
  EXPECT_EQ(denseForward(Tensor({2}, 0.0), ramp({2, 3}), b, Activation::kRelu).values(),
            (std::vector<double>{0.5, 0, 2}));
  EXPECT_EQ(codeOf([] { denseForward(Tensor({3}), Tensor({2, 2}), Tensor({2}), Activation::kNone); }),
            Errc::kShapeMismatch);
}

TEST(SoftmaxCrossEntropy, Values) {
  const auto r = softmaxCrossEntropy(Tensor({2}, {0, 0}), 1);
  EXPECT_DOUBLE_EQ(r.probs.flat(0), 0.5);
  EXPECT_DOUBLE_EQ(r.loss, std::log(2.0));
  const auto big = softmaxCrossEntropy(Tensor({2}, {1000, 0}), 0);
  EXPECT_TRUE(std::isfinite(big.loss));
  EXPECT_NEAR(big.loss, 0.0, 1e-12);
  // log(e + e^2 + e^3) - 1, frozen from numpy
  EXPECT_NEAR(softmaxCrossEntropy(Tensor({3}, {1, 2, 3}), 0).loss, 2.40760596444438, 1e-14);
  EXPECT_EQ(codeOf([] { softmaxCrossEntropy(Tensor({3}), 3); }), Errc::kLabelOutOfRange);
  const Tensor p = softmax(Tensor({2, 4}, {1, -2, 0.5, 30, 0, 0, 0, 0}));
  for (std::size_t row = 0; row < 2; ++row) {
    double s = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_GE(p.at(row, j), 0.0);
      s += p.at(row, j);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Optimizer, SgdAndAdamSteps) {
  std::vector<Tensor> params{Tensor({1}, 1.0)};
  const std::vector<Tensor> grads{Tensor({1}, 2.0)};
  std::vector<Tensor> m, v;
  optimizerStep(params, grads, Sgd{0.1}, m, v, 1);
  EXPECT_DOUBLE_EQ(params[0].flat(0), 0.8);

  std::vector<Tensor> zeros{Tensor({3}, 0.0)};
  std::vector<Tensor> p2{ramp({3})};
  optimizerStep(p2, zeros, Sgd{0.1}, m, v, 1);
  EXPECT_EQ(p2[0], ramp({3}));
  std::vector<Tensor> am, av;
  optimizerStep(p2, zeros, Adam{}, am, av, 1);
  EXPECT_EQ(p2[0], ramp({3}));

  // First Adam step moves by lr * sign(g) (up to eps).
  std::vector<Tensor> p3{Tensor({3}, {0.0, 0.0, 0.0})};
  const std::vector<Tensor> g3{Tensor({3}, {0.5, -3.0, 1e-3})};
  std::vector<Tensor> m3, v3;
  optimizerStep(p3, g3, Adam{}, m3, v3, 1);
  EXPECT_NEAR(p3[0].flat(0), -1e-3, 1e-6);
  EXPECT_NEAR(p3[0].flat(1), 1e-3, 1e-6);
  EXPECT_NEAR(p3[0].flat(2), -1e-3, 1e-6);

  std::vector<Tensor> bad{Tensor({2})};
  EXPECT_EQ(codeOf([&] { optimizerStep(bad, grads, Sgd{}, m, v, 1); }), Errc::kShapeMismatch);
}

TEST(Optimizer, MomentumAccumulates) {
  Optimizer opt(Sgd{0.1, 0.9});
  std::vector<Tensor> p{Tensor({1}, 0.0)};
  const std::vector<Tensor> g{Tensor({1}, 1.0)};
  opt.step(p, g);
  EXPECT_DOUBLE_EQ(p[0].flat(0), -0.1);
  opt.step(p, g);
  EXPECT_DOUBLE_EQ(p[0].flat(0), -0.1 - 0.19);
}

TEST(GradCheck, EveryLayerWithinTolerance) {
  GradCheckOptions o;
  o.seed = 77;
  for (const auto& r : runGradientChecks(o)) {
    EXPECT_TRUE(r.passed) << r.layer << " max rel error " << r.maxRelError;
    EXPECT_EQ(r.configs, 20u);
    EXPECT_GT(r.elements, 0u);
  }
}

}  // namespace
}  // namespace rawcsi::nn
