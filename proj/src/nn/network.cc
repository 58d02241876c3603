#include "rawcsi/nn/network.h"

#include <algorithm>
#include <cmath>

#include "rawcsi/error.h"

namespace rawcsi::nn {

std::size_t NamedTensors::add(std::string name, Tensor value) {
  if (contains(name)) fail(Errc::kInvariantViolation, "duplicate tensor name " + name);
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(value));
  return tensors_.size() - 1;
}

Tensor& NamedTensors::get(std::string_view name) {
  return const_cast<Tensor&>(static_cast<const NamedTensors&>(*this).get(name));
}

const Tensor& NamedTensors::get(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return tensors_[i];
  fail(Errc::kIndexOutOfRange, "no tensor named " + std::string(name));
}

bool NamedTensors::contains(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t NamedTensors::totalSize() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

ShapeTrace shapeCheck(const NetworkSpec& spec) {
  if (spec.input.size() != 3 || shapeProduct(spec.input) == 0) {
    fail(Errc::kShapeMismatch, "network input must be a non-empty [H, W, C], got " + shapeString(spec.input));
  }
  if (spec.numClasses < 2) fail(Errc::kShapeMismatch, "need at least 2 classes");
  ShapeTrace t;
  Shape cur = spec.input;
  for (const auto& c : spec.conv) {
    if (c.filters == 0) fail(Errc::kShapeMismatch, "conv stage with zero filters");
    const auto g = convGeometry(cur[0], cur[1], c.kernel, c.stride, c.padding);
    cur = {g.outRows, g.outCols, c.filters};
    t.convOutputs.push_back(cur);
  }
  if (spec.pools.empty()) {
    t.features = shapeProduct(cur);
  } else {
    for (const auto& p : spec.pools) {
      if (p.rows == 0 || p.cols == 0 || p.rows > cur[0] || p.cols > cur[1]) {
        fail(Errc::kPoolTooLarge, "pool " + std::to_string(p.rows) + "x" + std::to_string(p.cols) +
                                      " on conv output " + shapeString(cur));
      }
      t.poolOutputs.push_back({cur[0] / p.rows, cur[1] / p.cols, cur[2]});
      t.features += shapeProduct(t.poolOutputs.back());
    }
  }
  for (const auto& h : spec.hidden) {
    if (h.units == 0) fail(Errc::kShapeMismatch, "dense stage with zero units");
    if (!(h.dropout >= 0.0 && h.dropout < 1.0)) fail(Errc::kShapeMismatch, "dropout outside [0, 1)");
    t.hiddenUnits.push_back(h.units);
  }
  t.numClasses = spec.numClasses;
  return t;
}

namespace {

Tensor glorotUniform(Shape shape, std::size_t fanIn, std::size_t fanOut, Engine& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fanIn + fanOut));
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = uniform(rng, -limit, limit);
  return t;
}

}  // namespace

struct Network::Trace {
  struct Conv {
    Tensor input;
    BatchNormCache bn;
    Tensor output;  // post-ReLU
  };
  struct Dense {
    Tensor input;
    Tensor activated;  // post-ReLU, pre-dropout
    Tensor mask;
  };
  std::vector<Conv> conv;
  std::vector<Shape> poolShapes;
  std::vector<Dense> hidden;
  Tensor outInput;
  Tensor logits;
};

Network::Network(NetworkSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), shapes_(shapeCheck(spec_)), dropoutRng_(streamKey(seed, {0x44524f50 /* DROP */})) {
  auto init = makeEngine(seed, {0x494e4954 /* INIT */});
  std::size_t cin = spec_.input[2];
  for (std::size_t i = 0; i < spec_.conv.size(); ++i) {
    const auto& c = spec_.conv[i];
    const std::size_t area = c.kernel.rows * c.kernel.cols;
    const std::string p = "conv" + std::to_string(i);
    ConvSlots s;
    s.kernel = params_.add(p + ".kernel", glorotUniform({c.kernel.rows, c.kernel.cols, cin, c.filters},
                                                        area * cin, area * c.filters, init));
    if (c.batchNorm) {
      s.gamma = params_.add("bn" + std::to_string(i) + ".gamma", Tensor({c.filters}, 1.0));
      s.beta = params_.add("bn" + std::to_string(i) + ".beta", Tensor({c.filters}, 0.0));
      s.runMean = buffers_.add("bn" + std::to_string(i) + ".running_mean", Tensor({c.filters}, 0.0));
      s.runVar = buffers_.add("bn" + std::to_string(i) + ".running_var", Tensor({c.filters}, 1.0));
    } else if (spec_.convBias) {
      s.bias = params_.add(p + ".bias", Tensor({c.filters}, 0.0));
    }
    convSlots_.push_back(s);
    cin = c.filters;
  }
  std::size_t width = shapes_.features;
  for (std::size_t i = 0; i < spec_.hidden.size(); ++i) {
    const std::size_t u = spec_.hidden[i].units;
    const std::string p = "fc" + std::to_string(i);
    DenseSlots s;
    s.weight = params_.add(p + ".weight", glorotUniform({width, u}, width, u, init));
    s.bias = params_.add(p + ".bias", Tensor({u}, 0.0));
    hiddenSlots_.push_back(s);
    width = u;
  }
  outSlots_.weight = params_.add("out.weight", glorotUniform({width, spec_.numClasses}, width, spec_.numClasses, init));
  outSlots_.bias = params_.add("out.bias", Tensor({spec_.numClasses}, 0.0));
}

void Network::checkBatch(const Tensor& batch) const {
  if (batch.rank() != 4 || batch.dim(1) != spec_.input[0] || batch.dim(2) != spec_.input[1] ||
      batch.dim(3) != spec_.input[2]) {
    fail(Errc::kShapeMismatch, "batch " + shapeString(batch.shape()) + " for network input " +
                                   shapeString(spec_.input));
  }
}

Tensor Network::run(const Tensor& batch, Mode mode, Trace* trace, Engine* rng) const {
  checkBatch(batch);
  const std::size_t n = batch.dim(0);
  Tensor x = batch;
  if (trace) trace->conv.resize(spec_.conv.size());
  for (std::size_t i = 0; i < spec_.conv.size(); ++i) {
    const auto& c = spec_.conv[i];
    const auto& s = convSlots_[i];
    const Tensor& bias = s.bias == npos ? Tensor() : params_[s.bias];
    Tensor z = conv2dForward(x, params_[s.kernel], bias, c.stride, c.padding);
    if (c.batchNorm) {
      if (mode == Mode::kTrain) {
        BatchNormCache local;
        BatchNormCache& cache = trace ? trace->conv[i].bn : local;
        z = batchNormTrain(z, params_[s.gamma], params_[s.beta], spec_.bnEps, cache);
      } else {
        z = batchNormInfer(z, params_[s.gamma], params_[s.beta], {buffers_[s.runMean], buffers_[s.runVar]},
                           spec_.bnEps);
      }
    }
    z = relu(z);
    if (trace) {
      trace->conv[i].input = std::move(x);
      trace->conv[i].output = z;
    }
    x = std::move(z);
  }

  Tensor features;
  if (spec_.pools.empty()) {
    features = reshape(x, {n, x.size() / n});
  } else {
    std::vector<Tensor> pooled;
    pooled.reserve(spec_.pools.size());
    for (const auto& p : spec_.pools) pooled.push_back(avgPoolForward(x, p));
    features = concatFlattenBatch(pooled);
    if (trace) {
      trace->poolShapes.clear();
      for (const auto& t : pooled) trace->poolShapes.push_back(t.shape());
    }
  }

  if (trace) trace->hidden.resize(spec_.hidden.size());
  for (std::size_t i = 0; i < spec_.hidden.size(); ++i) {
    const auto& s = hiddenSlots_[i];
    Tensor a = denseForward(features, params_[s.weight], params_[s.bias], Activation::kRelu);
    Tensor mask;
    const double p = dropoutEnabled_ ? spec_.hidden[i].dropout : 0.0;
    Tensor out = mode == Mode::kTrain && rng ? dropoutForward(a, p, mode, *rng, trace ? &mask : nullptr) : a;
    if (trace) {
      trace->hidden[i].input = std::move(features);
      trace->hidden[i].activated = std::move(a);
      trace->hidden[i].mask = std::move(mask);
    }
    features = std::move(out);
  }
  Tensor logits = denseForward(features, params_[outSlots_.weight], params_[outSlots_.bias], Activation::kNone);
  if (trace) trace->outInput = std::move(features);
  return logits;
}

void Network::applyRunningStats(const Trace& trace) {
  for (std::size_t i = 0; i < spec_.conv.size(); ++i) {
    if (!spec_.conv[i].batchNorm) continue;
    const auto& s = convSlots_[i];
    const auto& bn = trace.conv[i].bn;
    Tensor& mean = buffers_[s.runMean];
    Tensor& var = buffers_[s.runVar];
    const double mom = spec_.bnMomentum;
    for (std::size_t k = 0; k < mean.size(); ++k) {
      mean.flat(k) = (1.0 - mom) * mean.flat(k) + mom * bn.batchMean[k];
      var.flat(k) = (1.0 - mom) * var.flat(k) + mom * bn.batchVar[k];
    }
  }
}

std::vector<std::uint8_t> Network::activationPattern(const Tensor& batch, Mode mode) const {
  Trace trace;
  run(batch, mode, &trace, nullptr);
  std::vector<std::uint8_t> bits;
  const auto append = [&bits](const Tensor& t) {
    for (double v : t.data()) bits.push_back(v > 0.0 ? 1 : 0);
  };
  for (const auto& c : trace.conv) append(c.output);
  for (const auto& h : trace.hidden) append(h.activated);
  return bits;
}

Tensor Network::predict(const Tensor& batch) const { return softmax(run(batch, Mode::kInfer, nullptr, nullptr)); }

Tensor Network::forward(const Tensor& batch, Mode mode) {
  if (mode == Mode::kInfer) return run(batch, mode, nullptr, nullptr);
  if (frozen_) fail(Errc::kInvariantViolation, "train-mode forward on a frozen network");
  Trace trace;
  Tensor logits = run(batch, mode, &trace, &dropoutRng_);
  applyRunningStats(trace);
  return logits;
}

double Network::loss(const Tensor& batch, std::span<const int> labels, Mode mode) {
  const Tensor logits = forward(batch, mode);
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (labels.size() != n) fail(Errc::kShapeMismatch, "label count differs from batch size");
  double total = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    Tensor row({k}, std::vector<double>(logits.data().begin() + s * k, logits.data().begin() + (s + 1) * k));
    total += softmaxCrossEntropy(row, labels[s]).loss;
  }
  return total / static_cast<double>(n);
}

LossAndGradients Network::backward(const Tensor& batch, std::span<const int> labels) {
  if (frozen_) fail(Errc::kInvariantViolation, "backward on a frozen network");
  Trace trace;
  const Tensor logits = run(batch, Mode::kTrain, &trace, &dropoutRng_);
  applyRunningStats(trace);

  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (labels.size() != n) fail(Errc::kShapeMismatch, "label count differs from batch size");
  LossAndGradients result;
  Tensor dLogits({n, k});
  for (std::size_t s = 0; s < n; ++s) {
    Tensor row({k}, std::vector<double>(logits.data().begin() + s * k, logits.data().begin() + (s + 1) * k));
    const auto sce = softmaxCrossEntropy(row, labels[s]);
    result.loss += sce.loss;
    for (std::size_t j = 0; j < k; ++j) dLogits.at(s, j) = sce.dLogits.flat(j) / static_cast<double>(n);
  }
  result.loss /= static_cast<double>(n);

  std::vector<Tensor> grads(params_.size());

  auto dOut = denseBackward(trace.outInput, params_[outSlots_.weight], dLogits);
  grads[outSlots_.weight] = std::move(dOut.dW);
  grads[outSlots_.bias] = std::move(dOut.dB);
  Tensor d = std::move(dOut.dx);

  for (std::size_t i = spec_.hidden.size(); i-- > 0;) {
    const auto& h = trace.hidden[i];
    if (!h.mask.empty()) d = mul(d, h.mask);
    d = reluBackward(h.activated, d);
    auto g = denseBackward(h.input, params_[hiddenSlots_[i].weight], d);
    grads[hiddenSlots_[i].weight] = std::move(g.dW);
    grads[hiddenSlots_[i].bias] = std::move(g.dB);
    d = std::move(g.dx);
  }

  const Tensor& convOut = spec_.conv.empty() ? batch : trace.conv.back().output;
  Tensor dx;
  if (spec_.pools.empty()) {
    dx = reshape(d, convOut.shape());
  } else {
    const auto parts = splitFlattenBatch(d, trace.poolShapes);
    dx = Tensor(convOut.shape());
    for (std::size_t p = 0; p < parts.size(); ++p) {
      const Tensor dp = avgPoolBackward(convOut.shape(), spec_.pools[p], parts[p]);
      auto dst = dx.data();
      auto src = dp.data();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }

  for (std::size_t i = spec_.conv.size(); i-- > 0;) {
    const auto& c = spec_.conv[i];
    const auto& s = convSlots_[i];
    const auto& t = trace.conv[i];
    dx = reluBackward(t.output, dx);
    if (c.batchNorm) {
      auto g = batchNormBackward(t.bn, params_[s.gamma], dx);
      grads[s.gamma] = std::move(g.dGamma);
      grads[s.beta] = std::move(g.dBeta);
      dx = std::move(g.dx);
    }
    auto g = conv2dBackward(t.input, params_[s.kernel], dx, c.stride, c.padding, i > 0);
    grads[s.kernel] = std::move(g.dKernel);
    if (s.bias != npos) grads[s.bias] = std::move(g.dBias);
    dx = std::move(g.dx);
  }

  for (std::size_t i = 0; i < params_.size(); ++i) result.gradients.add(params_.name(i), std::move(grads[i]));
  return result;
}

}  // namespace rawcsi::nn
