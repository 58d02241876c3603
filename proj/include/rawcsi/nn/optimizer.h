#ifndef RAWCSI_NN_OPTIMIZER_H_
#define RAWCSI_NN_OPTIMIZER_H_

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "rawcsi/tensor.h"

namespace rawcsi::nn {

struct Sgd {
  double lr = 0.01;
  double momentum = 0.0;
  bool operator==(const Sgd&) const = default;
};

struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool operator==(const Adam&) const = default;
};

using OptimizerConfig = std::variant<Sgd, Adam>;

// Holds Adam moments across steps. `step` counts from 1.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}

  void step(std::span<Tensor> params, std::span<const Tensor> grads);
  std::uint64_t stepCount() const { return steps_; }
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  std::vector<Tensor> m_, v_;
  std::uint64_t steps_ = 0;
};

// Stateless form for a single update with explicit moments and step count.
void optimizerStep(std::span<Tensor> params, std::span<const Tensor> grads, const OptimizerConfig& config,
                   std::vector<Tensor>& firstMoment, std::vector<Tensor>& secondMoment, std::uint64_t stepCount);

}  // namespace rawcsi::nn

#endif  // RAWCSI_NN_OPTIMIZER_H_
