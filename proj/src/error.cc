#include "rfic/error.h"

namespace rfic {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidLength:
      return "InvalidLength";
    case ErrorCode::kAliasedConfig:
      return "AliasedConfig";
    case ErrorCode::kInvalidArgument:
      return "InvalidArgument";
    case ErrorCode::kDelayTooLarge:
      return "DelayTooLarge";
    case ErrorCode::kRateMismatch:
      return "RateMismatch";
    case ErrorCode::kNoCoherentReference:
      return "NoCoherentReference";
    case ErrorCode::kDegenerateReference:
      return "DegenerateReference";
    case ErrorCode::kAmbiguousLabeling:
      return "AmbiguousLabeling";
    case ErrorCode::kInvalidSegment:
      return "InvalidSegment";
    case ErrorCode::kOutOfBand:
      return "OutOfBand";
    case ErrorCode::kTooShort:
      return "TooShort";
    case ErrorCode::kConfigError:
      return "ConfigError";
    case ErrorCode::kIoError:
      return "IoError";
  }
  return "Unknown";
}

}  // namespace rfic
