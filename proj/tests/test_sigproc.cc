#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rawcsi/rng.h"
#include "rawcsi/sigproc.h"
#include "test_util.h"

namespace rawcsi::sigproc {
namespace {

using rawcsi::testing::codeOf;
constexpr double kPi = std::numbers::pi;

CsiInstance single(std::vector<std::complex<double>> v) {
  return CsiInstance::fromComplex(1, v.size(), 1, v, 0);
}

TEST(Amplitude, Magnitudes) {
  const auto a = amplitude(single({{3, 4}, {0, 0}, {0, 2}}));
  EXPECT_EQ(a.values(), (std::vector<double>{5, 0, 2}));
}

TEST(Amplitude, Normalization) {
  EXPECT_EQ(normalizeAmplitude(Tensor({1, 2, 1}, {3, 4}), Normalization::kL2PerMeasurement).values(),
            (std::vector<double>{0.6, 0.8}));
  EXPECT_EQ(normalizeAmplitude(Tensor({1, 2, 1}, {0, 0}), Normalization::kL2PerMeasurement).values(),
            (std::vector<double>{0, 0}));
  const Tensor base({2, 3, 2}, {1, 2, 3, 4, 5, 6, 0.5, 0.1, 7, 8, 9, 2});
  const auto n1 = normalizeAmplitude(base, Normalization::kL2PerMeasurement);
  const auto n7 = normalizeAmplitude(scale(base, 7.0), Normalization::kL2PerMeasurement);
  for (std::size_t i = 0; i < n1.size(); ++i) EXPECT_NEAR(n1.flat(i), n7.flat(i), 1e-15);
  // slices run over subcarriers: (sample 0, antenna 0) is {1, 3, 5}
  EXPECT_NEAR(n1.at(0, 0, 0), 1.0 / std::sqrt(35.0), 1e-15);
  const auto mx = normalizeAmplitude(base, Normalization::kMaxPerMeasurement);
  EXPECT_DOUBLE_EQ(mx.at(0, 2, 0), 1.0);
  EXPECT_EQ(normalizeAmplitude(base, Normalization::kNone), base);
}

TEST(Phase, BranchConvention) {
  const auto p = phase(single({{1, 0}, {0, 1}, {-1, 0}, {0, 0}}));
  EXPECT_EQ(p.values.flat(0), 0.0);
  EXPECT_DOUBLE_EQ(p.values.flat(1), kPi / 2);
  EXPECT_EQ(p.values.flat(2), kPi);
  EXPECT_EQ(p.values.flat(3), 0.0);
  EXPECT_EQ(p.undefined, (std::vector<std::uint8_t>{0, 0, 0, 1}));
  EXPECT_EQ(p.undefinedCount(), 1u);
  // -1 - 0i also lands on +pi
  const auto neg = phase(single({{-1, -0.0}}));
  EXPECT_EQ(neg.values.flat(0), kPi);
}

TEST(Unwrap, ReferenceValues) {
  // Values below were produced by numpy.unwrap and frozen.
  EXPECT_EQ(unwrap(std::vector<double>{0, 1.0, 2.0}), (PhaseVector{0, 1.0, 2.0}));
  const auto a = unwrap(std::vector<double>{0, 3.2});
  EXPECT_NEAR(a[1], -3.083185307179586, 1e-15);
  const auto b = unwrap(std::vector<double>{0, 3.2, 3.3});
  EXPECT_NEAR(b[1], -3.083185307179586, 1e-15);
  EXPECT_NEAR(b[2], -2.9831853071795864, 1e-15);
  const auto c = unwrap(std::vector<double>{0.1, 3.0, -3.0, -0.5, 2.9, -2.8});
  const PhaseVector expect{0.1, 3.0, 3.2831853071795862, 5.783185307179586, 2.9, 3.4831853071795864};
  for (std::size_t j = 0; j < expect.size(); ++j) EXPECT_NEAR(c[j], expect[j], 1e-14) << j;
}

TEST(Sanitize, ReferenceValues) {
  std::vector<double> linear(9);
  for (std::size_t j = 0; j < linear.size(); ++j) linear[j] = 0.3 * static_cast<double>(j) + 1.7;
  for (double v : sanitize(linear)) EXPECT_LT(std::abs(v), 1e-12);
  for (double v : sanitize(std::vector<double>(5, -2.25))) EXPECT_LT(std::abs(v), 1e-12);

  const auto hand = sanitize(std::vector<double>{0, 1, 0});
  EXPECT_NEAR(hand[0], -1.0 / 3, 1e-15);
  EXPECT_NEAR(hand[1], 2.0 / 3, 1e-15);
  EXPECT_NEAR(hand[2], -1.0 / 3, 1e-15);

  // Frozen from an independent numpy evaluation.
  const std::vector<double> p{0.3, 1.1, 0.7, 2.0};
  const std::vector<double> endpoints{0.12499999999999994, 0.3583333333333334, -0.6083333333333334, 0.125};
  const std::vector<double> leastSquares{-0.019999999999999962, 0.31000000000000005, -0.5600000000000003, 0.27};
  const auto e = sanitize(p, SlopeFit::kEndpoints);
  const auto l = sanitize(p, SlopeFit::kLeastSquares);
  for (std::size_t j = 0; j < p.size(); ++j) {
    EXPECT_NEAR(e[j], endpoints[j], 1e-14);
    EXPECT_NEAR(l[j], leastSquares[j], 1e-14);
  }
  EXPECT_EQ(codeOf([] { sanitize(std::vector<double>{1.0}); }), Errc::kDegenerateLength);
}

TEST(Sanitize, MeanZeroEndpointsEqualAndLinearInvariance) {
  auto e = makeEngine(3, {1});
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(2 + uniformIndex(e, 40));
    for (double& v : p) v = uniform(e, -10, 10);
    const auto out = sanitize(p);
    double mean = 0;
    for (double v : out) mean += v;
    EXPECT_LT(std::abs(mean / static_cast<double>(out.size())), 1e-10);
    EXPECT_NEAR(out.front(), out.back(), 1e-10);
    const double a = uniform(e, -1, 1), b = uniform(e, -5, 5);
    auto shifted = p;
    for (std::size_t j = 0; j < p.size(); ++j) shifted[j] += a * static_cast<double>(j) + b;
    const auto again = sanitize(shifted);
    for (std::size_t j = 0; j < p.size(); ++j) EXPECT_NEAR(again[j], out[j], 1e-10);
  }
}

TEST(SanitizedComplex, IdentityConfigIsPolarRoundTrip) {
  auto e = makeEngine(5, {2});
  std::vector<std::complex<double>> v(3 * 8 * 2);
  for (auto& z : v) z = {uniform(e, -2, 2), uniform(e, -2, 2)};
  const auto inst = CsiInstance::fromComplex(3, 8, 2, v, 1);
  PipelineConfig cfg;
  cfg.normalization = Normalization::kNone;
  cfg.sanitize = false;
  const auto out = sanitizedComplex(inst, cfg).instance;
  EXPECT_EQ(out.label, 1);
  ASSERT_EQ(out.planes.shape(), inst.planes.shape());
  for (std::size_t i = 0; i < out.planes.size(); ++i) EXPECT_NEAR(out.planes.flat(i), inst.planes.flat(i), 1e-12);
}

TEST(SanitizedComplex, RemovesLinearPhaseShift) {
  // Small phases so unwrap never fires on either variant.
  const std::size_t n = 12;
  std::vector<std::complex<double>> base(n), shifted(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double theta = 0.2 * std::sin(0.7 * static_cast<double>(j));
    const double amp = 1.0 + 0.1 * static_cast<double>(j);
    base[j] = std::polar(amp, theta);
    shifted[j] = std::polar(amp, theta + 0.05 * static_cast<double>(j) + 0.4);
  }
  PipelineConfig cfg;
  const auto a = sanitizedComplex(single(base), cfg).instance;
  const auto b = sanitizedComplex(single(shifted), cfg).instance;
  for (std::size_t i = 0; i < a.planes.size(); ++i) EXPECT_NEAR(a.planes.flat(i), b.planes.flat(i), 1e-9);
}

TEST(SanitizedComplex, ZeroInstanceFlagsUndefined) {
  const auto r = sanitizedComplex(single(std::vector<std::complex<double>>(4)), PipelineConfig{});
  for (double v : r.instance.planes.data()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(r.phaseUndefined, (std::vector<std::uint8_t>(4, 1)));
}

TEST(Probe, StraddledPair) {
  const std::vector<double> a{0, 3.10}, b{0, 3.18};
  const auto r = unwrapInstabilityProbe(a, b);
  EXPECT_TRUE(r.straddled);
  EXPECT_NEAR(r.preDist, 0.08, 1e-12);
  EXPECT_NEAR(r.postDist, 2 * kPi - 0.08, 1e-12);

  const auto same = unwrapInstabilityProbe(a, a);
  EXPECT_EQ(same.preDist, 0.0);
  EXPECT_EQ(same.postDist, 0.0);
  EXPECT_FALSE(same.straddled);

  const std::vector<double> c{0, 1.0, 1.5}, d{0.02, 1.05, 1.4};
  const auto calm = unwrapInstabilityProbe(c, d);
  EXPECT_FALSE(calm.straddled);
  EXPECT_DOUBLE_EQ(calm.postDist, calm.preDist);
  EXPECT_EQ(codeOf([&] { unwrapInstabilityProbe(c, a); }), Errc::kLengthMismatch);
}

TEST(Probe, ConstructedPairIsRawPhase) {
  const auto pair = straddlingPair(30);
  ASSERT_EQ(pair.a.size(), 30u);
  for (double v : pair.a) EXPECT_TRUE(v > -kPi && v <= kPi);
  for (double v : pair.b) EXPECT_TRUE(v > -kPi && v <= kPi);
  const auto r = unwrapInstabilityProbe(pair.a, pair.b);
  EXPECT_TRUE(r.straddled);
  EXPECT_LT(r.preDist, 0.1);
  EXPECT_GT(r.postDist, 2 * kPi - 0.2);
}

}  // namespace
}  // namespace rawcsi::sigproc
