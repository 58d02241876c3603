#include "rawcsi/nn/optimizer.h"

#include <cmath>

#include "rawcsi/error.h"

namespace rawcsi::nn {

void optimizerStep(std::span<Tensor> params, std::span<const Tensor> grads, const OptimizerConfig& config,
                   std::vector<Tensor>& firstMoment, std::vector<Tensor>& secondMoment, std::uint64_t stepCount) {
  if (params.size() != grads.size()) fail(Errc::kShapeMismatch, "parameter and gradient counts differ");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape()) {
      fail(Errc::kShapeMismatch, "gradient " + std::to_string(i) + " shape " + shapeString(grads[i].shape()) +
                                     " vs parameter " + shapeString(params[i].shape()));
    }
  }

  const auto ensureMoments = [&](std::vector<Tensor>& moments) {
    if (moments.size() == params.size()) return;
    moments.clear();
    for (const auto& p : params) moments.emplace_back(p.shape());
  };

  if (const auto* sgd = std::get_if<Sgd>(&config)) {
    if (sgd->momentum == 0.0) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i].data();
        auto g = grads[i].data();
        for (std::size_t j = 0; j < p.size(); ++j) p[j] -= sgd->lr * g[j];
      }
      return;
    }
    // v <- mu v - lr g; p <- p + v
    ensureMoments(firstMoment);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i].data();
      auto g = grads[i].data();
      auto v = firstMoment[i].data();
      for (std::size_t j = 0; j < p.size(); ++j) {
        v[j] = sgd->momentum * v[j] - sgd->lr * g[j];
        p[j] += v[j];
      }
    }
    return;
  }

  const auto& adam = std::get<Adam>(config);
  if (stepCount == 0) fail(Errc::kConfigInvalid, "adam step count starts at 1");
  ensureMoments(firstMoment);
  ensureMoments(secondMoment);
  const double c1 = 1.0 - std::pow(adam.beta1, static_cast<double>(stepCount));
  const double c2 = 1.0 - std::pow(adam.beta2, static_cast<double>(stepCount));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto g = grads[i].data();
    auto m = firstMoment[i].data();
    auto v = secondMoment[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = adam.beta1 * m[j] + (1.0 - adam.beta1) * g[j];
      v[j] = adam.beta2 * v[j] + (1.0 - adam.beta2) * g[j] * g[j];
      const double mHat = m[j] / c1;
      const double vHat = v[j] / c2;
      p[j] -= adam.lr * mHat / (std::sqrt(vHat) + adam.eps);
    }
  }
}

void Optimizer::step(std::span<Tensor> params, std::span<const Tensor> grads) {
  ++steps_;
  optimizerStep(params, grads, config_, m_, v_, steps_);
}

}  // namespace rawcsi::nn
