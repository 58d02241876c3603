#ifndef RAWCSI_FRAMEWORK_H_
#define RAWCSI_FRAMEWORK_H_

// Declarative description of the raw-CSI network family: a convolution stack
// whose first stage pairs each Re row with its Im row (2x1 kernel, 2x1
// stride), a bank of parallel average pools over the final conv output,
// fully connected stages with dropout, and a softmax classifier.

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rawcsi/keyvalue.h"
#include "rawcsi/nn/network.h"

namespace rawcsi::framework {

using nn::Extent2;

struct InputShape {
  std::size_t rows = 0;      // 2m
  std::size_t cols = 0;      // n subcarriers
  std::size_t channels = 0;  // c antenna pairs
  bool operator==(const InputShape&) const = default;
};

struct ConvStage {
  Extent2 kernel;
  Extent2 stride;
  std::size_t filters = 32;
  bool batchNorm = true;
  bool operator==(const ConvStage&) const = default;
};

struct FcStage {
  std::size_t units = 1000;
  double dropout = 0.8;  // drop probability
  bool operator==(const FcStage&) const = default;
};

struct ArchitectureSpec {
  InputShape input;
  std::vector<ConvStage> conv;
  std::vector<Extent2> poolBank;
  bool poolBypass = false;  // flatten the conv output instead of pooling
  std::vector<FcStage> fc;
  std::size_t numClasses = 0;

  bool operator==(const ArchitectureSpec&) const = default;
};

inline constexpr std::size_t kDefaultFilters = 32;

// 4 conv stages (2x1/2x1, 3x3, 5x5, 10x10), pools {3x3, 5x5, 10x3, 20x3, 40x3},
// FC(1000) with dropout 0.8.
ArchitectureSpec signfiPreset(InputShape input, std::size_t numClasses, std::size_t filters = kDefaultFilters);

// 7 conv stages (2x1/2x1, 1x2, 1x3, 1x4, 1x8, 1x12, 1x16), pools {1x2, 1x3, 1x4},
// FC(1000)+dropout 0.8 twice.
ArchitectureSpec activityPreset(InputShape input, std::size_t numClasses, std::size_t filters = kDefaultFilters);

// Throws ValidationFailed naming the violated rule.
void validate(const ArchitectureSpec& spec);

// First stage uses valid padding, later stages same padding.
nn::NetworkSpec toNetworkSpec(const ArchitectureSpec& spec);

nn::Network build(const ArchitectureSpec& spec, std::uint64_t seed);

struct ConvDepth {
  std::size_t depth = 1;
  bool operator==(const ConvDepth&) const = default;
};
struct BatchNormOff {
  bool operator==(const BatchNormOff&) const = default;
};
struct AvgPoolOff {
  bool operator==(const AvgPoolOff&) const = default;
};
using Knob = std::variant<ConvDepth, BatchNormOff, AvgPoolOff>;

// convDepth(k) keeps the first stage and the next k-1 stages.
ArchitectureSpec ablate(const ArchitectureSpec& spec, const Knob& knob);

// "depth:<k>", "bn-off", "pool-off"
std::string knobName(const Knob& knob);
Knob parseKnob(std::string_view text);

// One key per conv stage, pool and FC row. `prefix` is prepended to every key.
std::string serialize(const ArchitectureSpec& spec, std::string_view prefix = "");
ArchitectureSpec parseArchitecture(const KeyValueConfig& cfg, std::string_view prefix = "");

std::string formatExtent(Extent2 e);
Extent2 parseExtent(std::string_view text);

}  // namespace rawcsi::framework

#endif  // RAWCSI_FRAMEWORK_H_
