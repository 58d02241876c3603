#ifndef RAWCSI_SIGPROC_H_
#define RAWCSI_SIGPROC_H_

// Classical CSI preprocessing: amplitude, normalization, phase extraction,
// unwrapping and linear-phase sanitization.

#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "rawcsi/csi.h"
#include "rawcsi/tensor.h"

namespace rawcsi::sigproc {

// Phase across the n subcarriers of one (sample, antenna), radians.
using PhaseVector = std::vector<double>;

enum class Normalization { kL2PerMeasurement, kMaxPerMeasurement, kNone };
enum class SlopeFit { kEndpoints, kLeastSquares };

struct PipelineConfig {
  double unwrapThreshold = std::numbers::pi;
  Normalization normalization = Normalization::kL2PerMeasurement;
  bool sanitize = true;
  SlopeFit slopeFit = SlopeFit::kEndpoints;

  void validate() const;
};

// |re + i im| per element, [m, n, c].
Tensor amplitude(const CsiInstance& inst);

// Scales each [n]-slice (fixed sample and antenna). Zero slices pass through.
Tensor normalizeAmplitude(const Tensor& amp, Normalization mode);

struct PhaseField {
  Tensor values;                      // [m, n, c], each in (-pi, pi]
  std::vector<std::uint8_t> undefined;  // 1 where re == im == 0 (value set to 0)

  PhaseVector vectorAt(std::size_t sample, std::size_t antenna) const;
  std::size_t undefinedCount() const;
};

PhaseField phase(const CsiInstance& inst);

// Adds -2pi / +2pi to every later subcarrier whenever the raw step between
// neighbours exceeds +threshold / falls below -threshold.
PhaseVector unwrap(std::span<const double> p, double threshold = std::numbers::pi);

// Removes slope a = (p[n-1] - p[0]) / (n-1) and offset b = mean(p[j] - a*j).
PhaseVector sanitize(std::span<const double> p, SlopeFit fit = SlopeFit::kEndpoints);

struct SanitizedInstance {
  CsiInstance instance;
  std::vector<std::uint8_t> phaseUndefined;  // [m, n, c] flags from phase()
};

// Rebuilds planes from normalized amplitude and (optionally) sanitized phase.
SanitizedInstance sanitizedComplex(const CsiInstance& inst, const PipelineConfig& cfg);

struct ProbeReport {
  double preDist = 0.0;   // L-inf between raw vectors
  double postDist = 0.0;  // L-inf between unwrapped vectors
  bool straddled = false;
};

// Measures how far unwrapping pushes two nearly identical phase vectors apart.
ProbeReport unwrapInstabilityProbe(std::span<const double> a, std::span<const double> b,
                                   double threshold = std::numbers::pi);

// Pair of raw phase vectors whose first step sits just either side of pi.
struct StraddlingPair {
  PhaseVector a, b;
};
StraddlingPair straddlingPair(std::size_t n = 30);

}  // namespace rawcsi::sigproc

#endif  // RAWCSI_SIGPROC_H_
