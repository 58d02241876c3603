#ifndef RAWCSI_HARNESS_H_
#define RAWCSI_HARNESS_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rawcsi/csi.h"
#include "rawcsi/framework.h"
#include "rawcsi/keyvalue.h"
#include "rawcsi/nn/network.h"
#include "rawcsi/nn/optimizer.h"
#include "rawcsi/sigproc.h"

namespace rawcsi::harness {

// rawComplex feeds planes untouched; the other two reproduce the classical
// preprocessing path.
enum class InputMode { kRawComplex, kAmplitudeOnly, kSanitizedComplex };

std::string inputModeName(InputMode mode);
InputMode parseInputMode(std::string_view text);

struct EarlyStop {
  std::size_t patience = 3;
  double minDelta = 1e-4;
};

struct TrainConfig {
  nn::OptimizerConfig optimizer = nn::Adam{};
  std::size_t batchSize = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  InputMode inputMode = InputMode::kRawComplex;
  sigproc::PipelineConfig pipeline;
  std::optional<EarlyStop> earlyStop;

  void validate() const;
};

TrainConfig parseTrainConfig(const KeyValueConfig& kv, const std::string& prefix = "train.");

struct FoldReport {
  double trueDetectionRate = 0.0;
  std::vector<std::vector<std::uint64_t>> confusion;  // [true][predicted]
  std::vector<double> lossCurve;                      // mean training loss per epoch
  bool failed = false;
  std::string failure;

  std::uint64_t total() const;
  std::uint64_t correct() const;
  bool operator==(const FoldReport&) const = default;
};

struct RunReport {
  std::vector<FoldReport> folds;
  double meanRate = 0.0;
  double stdRate = 0.0;  // sample standard deviation over successful folds
  std::string configDigest;
  std::string inputMode;
  std::uint64_t seed = 0;
  double wallClockSeconds = 0.0;

  // Equality on everything except wall clock.
  bool sameResults(const RunReport& other) const;
};

// Fills meanRate / stdRate from the successful folds.
void aggregate(RunReport& report);

CsiDataset preprocessDataset(const CsiDataset& ds, InputMode mode, const sigproc::PipelineConfig& cfg);

// [N, 2m, n, c] batch of the selected instances.
Tensor toBatch(const CsiDataset& ds, std::span<const std::size_t> indices);

struct TrainOutcome {
  FoldReport fold;
  nn::Network network;
};

// Trains on `train` and evaluates in inference mode on `test`. Both datasets
// are transformed by tc.inputMode first. Throws DivergedLoss on NaN/inf loss.
TrainOutcome trainModel(const CsiDataset& train, const CsiDataset& test, const framework::ArchitectureSpec& arch,
                        const TrainConfig& tc);
FoldReport trainOnce(const CsiDataset& train, const CsiDataset& test, const framework::ArchitectureSpec& arch,
                     const TrainConfig& tc);

// Stratified k-fold. Fold f is trained with seed mix64(seed ^ f); a diverged
// fold is recorded as failed.
RunReport crossValidate(const CsiDataset& ds, const framework::ArchitectureSpec& arch, const TrainConfig& tc,
                        std::size_t k, std::uint64_t seed);

// Meta key holding comma-separated per-instance user ids.
inline constexpr const char* kUserMetaKey = "users";

// Runs crossValidate separately on every user's instances and macro-averages
// the fold rates. Falls back to crossValidate when no user key is present.
RunReport crossValidatePerUser(const CsiDataset& ds, const framework::ArchitectureSpec& arch,
                               const TrainConfig& tc, std::size_t k, std::uint64_t seed);

struct AblationRow {
  std::string label;
  framework::ArchitectureSpec spec;
  RunReport report;
  bool duplicateOfBaseline = false;
};

// Baseline first, then one row per knob. Knobs that leave the spec unchanged
// reuse the baseline result instead of retraining.
std::vector<AblationRow> runAblation(const CsiDataset& ds, const framework::ArchitectureSpec& base,
                                     std::span<const framework::Knob> knobs, const TrainConfig& tc, std::size_t k);

// Digest of architecture, optimizer, schedule and seed; excludes the input mode.
std::string configDigest(const framework::ArchitectureSpec& arch, const TrainConfig& tc);

// format is "json" or "csv"; anything else throws a usage error before writing.
std::uint64_t emitReport(const RunReport& report, std::string_view format, std::ostream& sink);
RunReport parseReportJson(std::istream& source);
std::uint64_t emitAblationTable(std::span<const AblationRow> rows, std::string_view format, std::ostream& sink);

}  // namespace rawcsi::harness

#endif  // RAWCSI_HARNESS_H_
