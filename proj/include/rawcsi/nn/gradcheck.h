#ifndef RAWCSI_NN_GRADCHECK_H_
#define RAWCSI_NN_GRADCHECK_H_

#include <cstdint>
#include <string>
#include <vector>

namespace rawcsi::nn {

// Central differences against backprop on randomly shaped layer instances.
// Relative error per element is |a - n| / max(|a|, |n|, floor).
struct GradCheckOptions {
  std::size_t configsPerLayer = 20;
  double step = 1e-5;
  double tolerance = 1e-4;
  double floor = 1e-6;
  std::uint64_t seed = 1;
};

struct GradCheckResult {
  std::string layer;  // conv2d, batchnorm, avgpool, dense, softmax-ce, network
  std::size_t configs = 0;
  std::size_t elements = 0;  // gradient entries compared
  std::size_t skipped = 0;   // probes whose +-h crossed a ReLU kink
  double maxRelError = 0.0;
  bool passed = false;
};

std::vector<GradCheckResult> runGradientChecks(const GradCheckOptions& options);

}  // namespace rawcsi::nn

#endif  // RAWCSI_NN_GRADCHECK_H_
