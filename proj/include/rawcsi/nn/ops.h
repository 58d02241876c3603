#ifndef RAWCSI_NN_OPS_H_
#define RAWCSI_NN_OPS_H_

// Layer kernels. Spatial tensors are channels-last: a single input is
// [H, W, C] and a batch is [N, H, W, C]; every kernel accepts either.

#include <span>
#include <vector>

#include "rawcsi/rng.h"
#include "rawcsi/tensor.h"

namespace rawcsi::nn {

enum class Mode { kTrain, kInfer };
enum class Padding { kSame, kValid };
enum class Activation { kRelu, kNone };

struct Extent2 {
  std::size_t rows = 1;
  std::size_t cols = 1;
  bool operator==(const Extent2&) const = default;
};

struct ConvGeometry {
  std::size_t outRows = 0, outCols = 0;
  std::size_t padTop = 0, padLeft = 0;
};

// valid: out = floor((in - k) / s) + 1, throws KernelTooLarge when k > in.
// same:  out = ceil(in / s), zero padding split low/high with the odd pixel high.
ConvGeometry convGeometry(std::size_t inRows, std::size_t inCols, Extent2 kernel, Extent2 stride,
                          Padding padding);

// Cross-correlation. kernel is [kh, kw, Cin, Cout]; bias is [Cout] or empty.
Tensor conv2dForward(const Tensor& x, const Tensor& kernel, const Tensor& bias, Extent2 stride,
                     Padding padding);

struct Conv2dGrads {
  Tensor dx;  // empty when not requested
  Tensor dKernel;
  Tensor dBias;
};
Conv2dGrads conv2dBackward(const Tensor& x, const Tensor& kernel, const Tensor& dy, Extent2 stride,
                           Padding padding, bool needInputGrad = true);

struct RunningStats {
  Tensor mean;
  Tensor var;
};

struct BatchNormCache {
  Tensor xhat;
  std::vector<double> invStd;
  std::vector<double> batchMean;
  std::vector<double> batchVar;
};

// x is [N, H, W, C]; statistics are per channel over N*H*W positions.
// Train mode needs N >= 2 and updates `running` with the given momentum.
// Infer mode reads `running` only.
Tensor batchNormForward(const Tensor& x, const Tensor& gamma, const Tensor& beta, RunningStats& running,
                        Mode mode, double momentum = 0.1, double eps = 1e-5, BatchNormCache* cache = nullptr);
Tensor batchNormInfer(const Tensor& x, const Tensor& gamma, const Tensor& beta, const RunningStats& running,
                      double eps = 1e-5);
// Train-mode forward without touching running statistics.
Tensor batchNormTrain(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                      BatchNormCache& cache);

struct BatchNormGrads {
  Tensor dx, dGamma, dBeta;
};
BatchNormGrads batchNormBackward(const BatchNormCache& cache, const Tensor& gamma, const Tensor& dy);

// Non-overlapping windows (stride == pool); trailing rows/cols are dropped.
Tensor avgPoolForward(const Tensor& x, Extent2 pool);
Tensor avgPoolBackward(const Shape& xShape, Extent2 pool, const Tensor& dy);

// Row-major flatten of each part, concatenated in order.
Tensor concatFlatten(std::span<const Tensor> parts);
// Each part is [N, ...]; result is [N, sum of per-sample sizes].
Tensor concatFlattenBatch(std::span<const Tensor> parts);
std::vector<Tensor> splitFlattenBatch(const Tensor& d, std::span<const Shape> partShapes);

// Inverted dropout. In train mode each element is zeroed with probability
// dropProb and survivors are scaled by 1/(1-dropProb). If `mask` is given it
// receives the per-element multiplier.
Tensor dropoutForward(const Tensor& x, double dropProb, Mode mode, Engine& rng, Tensor* mask = nullptr);

// x is [d] or [N, d]; w is [d, u]; b is [u].
Tensor denseForward(const Tensor& x, const Tensor& w, const Tensor& b, Activation activation);

struct DenseGrads {
  Tensor dx, dW, dB;
};
// dy is the gradient w.r.t. the pre-activation output.
DenseGrads denseBackward(const Tensor& x, const Tensor& w, const Tensor& dy, bool needInputGrad = true);

// Gradient through ReLU given its output.
Tensor reluBackward(const Tensor& y, const Tensor& dy);

struct SoftmaxCrossEntropy {
  double loss = 0.0;
  Tensor probs;
  Tensor dLogits;
};
SoftmaxCrossEntropy softmaxCrossEntropy(const Tensor& logits, int label);

// Row-wise softmax of [N, K] (or [K]) with max shift.
Tensor softmax(const Tensor& logits);

}  // namespace rawcsi::nn

#endif  // RAWCSI_NN_OPS_H_
