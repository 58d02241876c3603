#ifndef RAWCSI_SYNTH_H_
#define RAWCSI_SYNTH_H_

// Deterministic synthetic CSI. Each class owns a multipath frequency response
//   H_k[j] = sum_p a_p * exp(-i 2 pi j tau_p)
// drawn once per (class, antenna). Each measurement i of an instance sees
//   s_i * H_k[j] * exp(i (a_i j + b_i)) + noise
// with a per-measurement clock slope a_i, offset b_i and RSS scale s_i, plus
// optional subband interference bursts. Every draw is keyed by
// (seed, role, ids), never by draw order; see docs/rng.md.

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rawcsi/csi.h"
#include "rawcsi/keyvalue.h"

namespace rawcsi::synth {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Range&) const = default;
};

struct RfiConfig {
  std::size_t subbandStart = 10;
  std::size_t subbandWidth = 6;
  double burstStd = 1.0;
  double burstProb = 0.3;
  bool operator==(const RfiConfig&) const = default;
};

enum class ScaleDistribution { kLogUniform, kUniform };

struct SynthConfig {
  std::size_t numClasses = 10;
  std::size_t instancesPerClass = 250;
  std::size_t m = 5;
  std::size_t n = 30;
  std::size_t c = 1;
  std::size_t paths = 4;
  Range pathGainRange{0.2, 1.0};
  Range delaySpreadRange{0.0, 0.15};  // cycles per subcarrier, within [0, 1)
  double noiseStd = 0.05;             // E|noise|^2 = noiseStd^2
  Range phaseSlopeRange{-0.1, 0.1};   // radians per subcarrier
  Range phaseOffsetRange{-3.141592653589793, 3.141592653589793};
  Range ampScaleRange{0.5, 2.0};
  ScaleDistribution scaleDistribution = ScaleDistribution::kLogUniform;
  std::optional<RfiConfig> rfi;
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const SynthConfig&) const = default;
};

// Same classes, no slope/offset/scale/noise/RFI.
SynthConfig impairmentFree(SynthConfig cfg);

// Row-major [n, c].
std::vector<std::complex<double>> classResponse(std::size_t classId, const SynthConfig& cfg);

struct MeasurementImpairment {
  double slope = 0.0;
  double offset = 0.0;
  double scale = 1.0;
};
MeasurementImpairment drawImpairment(const SynthConfig& cfg, std::size_t classId, std::size_t instance,
                                     std::size_t measurement);

// Instances are ordered instance-major: (instance 0 of every class), (instance 1 ...), ...
// so the first t * numClasses entries hold t instances of every class.
CsiDataset generate(const SynthConfig& cfg);

// Nearest centroid on the flattened raw planes; centroids from `train`.
double nearestCentroidAccuracy(const CsiDataset& train, const CsiDataset& test);

struct SanityReport {
  double cleanAccuracy = 0.0;     // impairment-free variant, resubstitution
  double impairedAccuracy = 0.0;  // cfg as given, resubstitution
};
SanityReport oracleSanityCheck(const SynthConfig& cfg);

// Keys under `prefix` (default "synth."); absent keys keep the defaults.
SynthConfig parseSynthConfig(const KeyValueConfig& kv, const std::string& prefix = "synth.");

}  // namespace rawcsi::synth

#endif  // RAWCSI_SYNTH_H_
