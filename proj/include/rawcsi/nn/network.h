#ifndef RAWCSI_NN_NETWORK_H_
#define RAWCSI_NN_NETWORK_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rawcsi/nn/ops.h"
#include "rawcsi/rng.h"
#include "rawcsi/tensor.h"

namespace rawcsi::nn {

// Ordered name -> tensor table used for parameters, buffers and gradients.
class NamedTensors {
 public:
  std::size_t add(std::string name, Tensor value);
  std::size_t size() const { return tensors_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
  Tensor& get(std::string_view name);
  const Tensor& get(std::string_view name) const;
  bool contains(std::string_view name) const;
  std::span<Tensor> tensors() { return tensors_; }
  std::span<const Tensor> tensors() const { return tensors_; }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t totalSize() const;

  bool operator==(const NamedTensors&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

using Gradients = NamedTensors;

struct ConvLayerSpec {
  Extent2 kernel;
  Extent2 stride;
  Padding padding = Padding::kSame;
  std::size_t filters = 32;
  bool batchNorm = true;
  bool operator==(const ConvLayerSpec&) const = default;
};

struct DenseLayerSpec {
  std::size_t units = 1000;
  double dropout = 0.0;
  bool operator==(const DenseLayerSpec&) const = default;
};

// conv(+BN)+ReLU stack -> parallel average pools (or a plain flatten when
// `pools` is empty) -> concat -> dense+ReLU+dropout stages -> logits.
struct NetworkSpec {
  Shape input;  // [H, W, C]
  std::vector<ConvLayerSpec> conv;
  std::vector<Extent2> pools;
  std::vector<DenseLayerSpec> hidden;
  std::size_t numClasses = 2;
  double bnMomentum = 0.1;
  double bnEps = 1e-5;
  bool convBias = true;  // only applies to stages without batch norm

  bool operator==(const NetworkSpec&) const = default;
};

struct ShapeTrace {
  std::vector<Shape> convOutputs;  // per conv stage, [H, W, C]
  std::vector<Shape> poolOutputs;  // per pool, [H, W, C]
  std::size_t features = 0;        // concat width
  std::vector<std::size_t> hiddenUnits;
  std::size_t numClasses = 0;
};

// Static shape propagation; throws KernelTooLarge / PoolTooLarge / ShapeMismatch.
ShapeTrace shapeCheck(const NetworkSpec& spec);

struct LossAndGradients {
  double loss = 0.0;
  Gradients gradients;
};

class Network {
 public:
  Network(NetworkSpec spec, std::uint64_t seed);

  const NetworkSpec& spec() const { return spec_; }

  // Inference-mode class probabilities [N, K]. Never mutates the network.
  Tensor predict(const Tensor& batch) const;

  // Logits in either mode; train mode draws dropout masks and updates the
  // batch-norm running statistics.
  Tensor forward(const Tensor& batch, Mode mode);

  double loss(const Tensor& batch, std::span<const int> labels, Mode mode);

  // Mean cross-entropy over the batch and its exact gradients (train mode).
  LossAndGradients backward(const Tensor& batch, std::span<const int> labels);

  // One byte per ReLU unit (1 = active) for the whole batch; dropout off.
  // Gradient checks use it to skip probes that cross a kink.
  std::vector<std::uint8_t> activationPattern(const Tensor& batch, Mode mode) const;

  NamedTensors& parameters() { return params_; }
  const NamedTensors& parameters() const { return params_; }
  NamedTensors& buffers() { return buffers_; }
  const NamedTensors& buffers() const { return buffers_; }

  void setDropoutEnabled(bool enabled) { dropoutEnabled_ = enabled; }
  bool dropoutEnabled() const { return dropoutEnabled_; }

  // After freeze() train-mode calls throw; the network can be shared.
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

 private:
  struct ConvSlots {
    std::size_t kernel, bias = npos, gamma = npos, beta = npos, runMean = npos, runVar = npos;
  };
  struct DenseSlots {
    std::size_t weight, bias;
  };
  struct Trace;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  Tensor run(const Tensor& batch, Mode mode, Trace* trace, Engine* rng) const;
  void applyRunningStats(const Trace& trace);
  void checkBatch(const Tensor& batch) const;

  NetworkSpec spec_;
  ShapeTrace shapes_;
  NamedTensors params_;
  NamedTensors buffers_;
  std::vector<ConvSlots> convSlots_;
  std::vector<DenseSlots> hiddenSlots_;
  DenseSlots outSlots_{};
  Engine dropoutRng_;
  bool dropoutEnabled_ = true;
  bool frozen_ = false;
};

}  // namespace rawcsi::nn

#endif  // RAWCSI_NN_NETWORK_H_
