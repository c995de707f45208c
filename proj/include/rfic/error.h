#ifndef RFIC_ERROR_H_
#define RFIC_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace rfic {

enum class ErrorCode {
  kInvalidLength,
  kAliasedConfig,
  kInvalidArgument,
  kDelayTooLarge,
  kRateMismatch,
  kNoCoherentReference,
  kDegenerateReference,
  kAmbiguousLabeling,
  kInvalidSegment,
  kOutOfBand,
  kTooShort,
  kConfigError,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

// All recoverable failures in the library are reported with this type. The
// code lets callers (the experiment runner in particular) decide which
// failures are fatal and which only flag a result row.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code),
        detail_(what) {}

  ErrorCode code() const { return code_; }
  // Message without the code prefix.
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace rfic

#endif  // RFIC_ERROR_H_
