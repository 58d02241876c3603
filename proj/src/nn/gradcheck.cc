#include "rawcsi/nn/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include "rawcsi/nn/network.h"
#include "rawcsi/nn/ops.h"
#include "rawcsi/rng.h"

namespace rawcsi::nn {

namespace {

struct Tally {
  std::size_t elements = 0;
  std::size_t skipped = 0;
  double maxRel = 0.0;
};

Tensor randomTensor(const Shape& shape, Engine& e, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (double& v : t.data()) v = uniform(e, lo, hi);
  return t;
}

std::size_t pick(Engine& e, std::size_t lo, std::size_t hi) { return lo + uniformIndex(e, hi - lo + 1); }

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.flat(i) * b.flat(i);
  return s;
}

// Compares `analytic` with central differences of f over every entry of x.
// `skip` (optional) reports whether a probe pair crossed a non-smooth point.
void compare(Tensor& x, const Tensor& analytic, const std::function<double()>& f, const GradCheckOptions& o,
             Tally& tally, const std::function<bool()>& skip = {}) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x.flat(i);
    x.flat(i) = saved + o.step;
    const double up = f();
    const bool crossUp = skip && skip();
    x.flat(i) = saved - o.step;
    const double down = f();
    const bool crossDown = skip && skip();
    x.flat(i) = saved;
    if (crossUp || crossDown) {
      ++tally.skipped;
      continue;
    }
    const double numeric = (up - down) / (2.0 * o.step);
    const double a = analytic.flat(i);
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), o.floor});
    tally.maxRel = std::max(tally.maxRel, rel);
    ++tally.elements;
  }
}

void checkConv(Engine& e, const GradCheckOptions& o, Tally& t) {
  const Extent2 k{pick(e, 1, 3), pick(e, 1, 3)};
  const Extent2 s{pick(e, 1, 2), pick(e, 1, 2)};
  const Padding pad = uniformIndex(e, 2) ? Padding::kSame : Padding::kValid;
  const std::size_t n = pick(e, 1, 2), h = pick(e, k.rows, 6), w = pick(e, k.cols, 6);
  const std::size_t cin = pick(e, 1, 3), cout = pick(e, 1, 3);
  Tensor x = randomTensor({n, h, w, cin}, e);
  Tensor kernel = randomTensor({k.rows, k.cols, cin, cout}, e);
  Tensor bias = uniformIndex(e, 2) ? randomTensor({cout}, e) : Tensor();
  const Tensor y = conv2dForward(x, kernel, bias, s, pad);
  const Tensor proj = randomTensor(y.shape(), e);
  const auto g = conv2dBackward(x, kernel, proj, s, pad);
  const auto f = [&] { return dot(conv2dForward(x, kernel, bias, s, pad), proj); };
  compare(x, g.dx, f, o, t);
  compare(kernel, g.dKernel, f, o, t);
  if (!bias.empty()) compare(bias, g.dBias, f, o, t);
}

void checkBatchNorm(Engine& e, const GradCheckOptions& o, Tally& t) {
  const std::size_t n = pick(e, 2, 4), h = pick(e, 1, 3), w = pick(e, 1, 3), c = pick(e, 1, 3);
  Tensor x = randomTensor({n, h, w, c}, e, -2.0, 2.0);
  Tensor gamma = randomTensor({c}, e, 0.5, 1.5);
  Tensor beta = randomTensor({c}, e);
  BatchNormCache cache;
  const Tensor y = batchNormTrain(x, gamma, beta, 1e-5, cache);
  const Tensor proj = randomTensor(y.shape(), e);
  const auto g = batchNormBackward(cache, gamma, proj);
  const auto f = [&] {
    BatchNormCache scratch;
    return dot(batchNormTrain(x, gamma, beta, 1e-5, scratch), proj);
  };
  compare(x, g.dx, f, o, t);
  compare(gamma, g.dGamma, f, o, t);
  compare(beta, g.dBeta, f, o, t);
}

void checkAvgPool(Engine& e, const GradCheckOptions& o, Tally& t) {
  const Extent2 p{pick(e, 1, 3), pick(e, 1, 3)};
  const std::size_t n = pick(e, 1, 2), h = pick(e, p.rows, 7), w = pick(e, p.cols, 7), c = pick(e, 1, 3);
  Tensor x = randomTensor({n, h, w, c}, e);
  const Tensor y = avgPoolForward(x, p);
  const Tensor proj = randomTensor(y.shape(), e);
  const Tensor dx = avgPoolBackward(x.shape(), p, proj);
  compare(x, dx, [&] { return dot(avgPoolForward(x, p), proj); }, o, t);
}

void checkDense(Engine& e, const GradCheckOptions& o, Tally& t) {
  const std::size_t n = pick(e, 1, 4), d = pick(e, 1, 8), u = pick(e, 1, 6);
  Tensor x = randomTensor({n, d}, e);
  Tensor w = randomTensor({d, u}, e);
  Tensor b = randomTensor({u}, e);
  const Tensor proj = randomTensor({n, u}, e);
  const auto g = denseBackward(x, w, proj);
  const auto f = [&] { return dot(denseForward(x, w, b, Activation::kNone), proj); };
  compare(x, g.dx, f, o, t);
  compare(w, g.dW, f, o, t);
  compare(b, g.dB, f, o, t);
}

void checkSoftmaxCe(Engine& e, const GradCheckOptions& o, Tally& t) {
  const std::size_t k = pick(e, 2, 8);
  Tensor logits = randomTensor({k}, e, -3.0, 3.0);
  const int label = static_cast<int>(uniformIndex(e, k));
  const auto r = softmaxCrossEntropy(logits, label);
  compare(logits, r.dLogits, [&] { return softmaxCrossEntropy(logits, label).loss; }, o, t);
}

void checkNetwork(Engine& e, const GradCheckOptions& o, Tally& t) {
  NetworkSpec spec;
  const std::size_t m = pick(e, 1, 3);
  spec.input = {2 * m, pick(e, 3, 6), pick(e, 1, 2)};
  const bool bn = uniformIndex(e, 2) == 1;
  spec.conv.push_back({{2, 1}, {2, 1}, Padding::kValid, pick(e, 2, 3), bn});
  spec.conv.push_back({{1, pick(e, 1, 3)}, {1, 1}, Padding::kSame, pick(e, 2, 3), bn});
  if (uniformIndex(e, 2)) spec.pools = {{1, 1}, {1, 2}};
  spec.hidden.push_back({pick(e, 3, 6), 0.5});
  spec.numClasses = pick(e, 2, 4);
  Network net(spec, e());
  net.setDropoutEnabled(false);
  const std::size_t n = pick(e, 2, 4);
  const Tensor batch = randomTensor({n, spec.input[0], spec.input[1], spec.input[2]}, e, -2.0, 2.0);
  std::vector<int> labels(n);
  for (int& l : labels) l = static_cast<int>(uniformIndex(e, spec.numClasses));

  const auto lg = net.backward(batch, labels);
  const auto base = net.activationPattern(batch, Mode::kTrain);
  const auto f = [&] { return net.loss(batch, labels, Mode::kTrain); };
  const auto crossed = [&] { return net.activationPattern(batch, Mode::kTrain) != base; };
  auto& params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) compare(params[i], lg.gradients[i], f, o, t, crossed);
}

}  // namespace

std::vector<GradCheckResult> runGradientChecks(const GradCheckOptions& o) {
  using Check = void (*)(Engine&, const GradCheckOptions&, Tally&);
  const std::pair<const char*, Check> checks[] = {
      {"conv2d", checkConv},   {"batchnorm", checkBatchNorm},   {"avgpool", checkAvgPool},
      {"dense", checkDense},   {"softmax-ce", checkSoftmaxCe}, {"network", checkNetwork},
  };
  std::vector<GradCheckResult> out;
  std::uint64_t role = 0;
  for (const auto& [name, check] : checks) {
    Tally tally;
    for (std::size_t c = 0; c < o.configsPerLayer; ++c) {
      auto e = makeEngine(o.seed, {0x47524144 /* GRAD */, role, c});
      check(e, o, tally);
    }
    ++role;
    GradCheckResult r;
    r.layer = name;
    r.configs = o.configsPerLayer;
    r.elements = tally.elements;
    r.skipped = tally.skipped;
    r.maxRelError = tally.maxRel;
    r.passed = tally.elements > 0 && tally.maxRel < o.tolerance;
    out.push_back(r);
  }
  return out;
}

}  // namespace rawcsi::nn
