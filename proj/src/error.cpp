#include "interlat/error.hpp"

namespace interlat {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::AxisOutOfRange: return "AxisOutOfRange";
    case ErrorKind::ElementCountMismatch: return "ElementCountMismatch";
    case ErrorKind::InvalidPermutation: return "InvalidPermutation";
    case ErrorKind::NonScalarRoot: return "NonScalarRoot";
    case ErrorKind::EmptyTape: return "EmptyTape";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NonFiniteEvaluation: return "NonFiniteEvaluation";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::DtypeMismatch: return "DtypeMismatch";
    case ErrorKind::NonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorKind::TooFewLatents: return "TooFewLatents";
    case ErrorKind::InvalidDimension: return "InvalidDimension";
    case ErrorKind::StepOutOfRange: return "StepOutOfRange";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::DatasetEmpty: return "DatasetEmpty";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorKind::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::UnknownClass: return "UnknownClass";
  }
  return "Error";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IoError:
    case ErrorKind::FormatVersionMismatch:
    case ErrorKind::ChecksumMismatch:
      return 3;
    case ErrorKind::NonFinite:
    case ErrorKind::NonFiniteEvaluation:
    case ErrorKind::NonFiniteLoss:
      return 4;
    default:
      return 2;
  }
}

}  // namespace interlat
