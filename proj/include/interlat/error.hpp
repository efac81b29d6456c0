#pragma once

#include <stdexcept>
#include <string>

namespace interlat {

// Every failure mode in the library maps to one of these kinds. The CLI
// translates kinds to process exit codes (config -> 2, io -> 3, numeric -> 4).
enum class ErrorKind {
  ShapeMismatch,
  AxisOutOfRange,
  ElementCountMismatch,
  InvalidPermutation,
  NonScalarRoot,
  EmptyTape,
  NonFinite,
  NonFiniteEvaluation,
  NonFiniteLoss,
  DimMismatch,
  DtypeMismatch,
  NonPositiveTemperature,
  TooFewLatents,
  InvalidDimension,
  StepOutOfRange,
  ConfigInvalid,
  DatasetEmpty,
  IoError,
  FormatVersionMismatch,
  ChecksumMismatch,
  UnknownClass,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

// Exit code contract: 0 success, 1 check failure, 2 bad config, 3 io, 4 numeric.
int exit_code_for(ErrorKind kind);

}  // namespace interlat
