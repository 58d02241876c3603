#include "rawcsi/error.h"

namespace rawcsi {

const char* errcName(Errc code) {
  switch (code) {
    case Errc::kShapeMismatch: return "ShapeMismatch";
    case Errc::kIndexOutOfRange: return "IndexOutOfRange";
    case Errc::kIoFailure: return "IoFailure";
    case Errc::kHeterogeneousShapes: return "HeterogeneousShapes";
    case Errc::kBadMagic: return "BadMagic";
    case Errc::kVersionUnsupported: return "VersionUnsupported";
    case Errc::kTruncatedStream: return "TruncatedStream";
    case Errc::kInvariantViolation: return "InvariantViolation";
    case Errc::kTooFewInstances: return "TooFewInstances";
    case Errc::kDegenerateLength: return "DegenerateLength";
    case Errc::kLengthMismatch: return "LengthMismatch";
    case Errc::kKernelTooLarge: return "KernelTooLarge";
    case Errc::kBatchTooSmall: return "BatchTooSmall";
    case Errc::kPoolTooLarge: return "PoolTooLarge";
    case Errc::kEmptyInput: return "EmptyInput";
    case Errc::kLabelOutOfRange: return "LabelOutOfRange";
    case Errc::kShapeIncompatible: return "ShapeIncompatible";
    case Errc::kValidationFailed: return "ValidationFailed";
    case Errc::kInvalidKnob: return "InvalidKnob";
    case Errc::kConfigInvalid: return "ConfigInvalid";
    case Errc::kDivergedLoss: return "DivergedLoss";
    case Errc::kUsage: return "UsageError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errcName(code)) + ": " + what), code_(code) {}

void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace rawcsi
