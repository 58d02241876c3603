#ifndef RAWCSI_ERROR_H_
#define RAWCSI_ERROR_H_

#include <stdexcept>
#include <string>

namespace rawcsi {

// Failure categories shared by every module. The CLI maps them onto exit codes.
enum class Errc {
  kShapeMismatch,
  kIndexOutOfRange,
  kIoFailure,
  kHeterogeneousShapes,
  kBadMagic,
  kVersionUnsupported,
  kTruncatedStream,
  kInvariantViolation,
  kTooFewInstances,
  kDegenerateLength,
  kLengthMismatch,
  kKernelTooLarge,
  kBatchTooSmall,
  kPoolTooLarge,
  kEmptyInput,
  kLabelOutOfRange,
  kShapeIncompatible,
  kValidationFailed,
  kInvalidKnob,
  kConfigInvalid,
  kDivergedLoss,
  kUsage,
};

const char* errcName(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

}  // namespace rawcsi

#endif  // RAWCSI_ERROR_H_
