#include "motiontrim/error.hpp"

namespace motiontrim {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyDirectory: return "EmptyDirectory";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::MissingFrame: return "MissingFrame";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::CorruptFile: return "CorruptFile";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InsufficientHistory: return "InsufficientHistory";
    case ErrorKind::OutOfBounds: return "OutOfBounds";
    case ErrorKind::NoEligibleFrames: return "NoEligibleFrames";
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::EmptySampleSet: return "EmptySampleSet";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::EmptySelection: return "EmptySelection";
    case ErrorKind::InsufficientFrames: return "InsufficientFrames";
    case ErrorKind::RangeTooShort: return "RangeTooShort";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::RaggedRows: return "RaggedRows";
    case ErrorKind::MissingPolarity: return "MissingPolarity";
    case ErrorKind::InconsistentMap: return "InconsistentMap";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::CheckpointMismatch: return "CheckpointMismatch";
    case ErrorKind::Locked: return "Locked";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::Locked:
      return 2;
    case ErrorKind::NonFiniteLoss:
      return 4;
    case ErrorKind::EmptySelection:
      return 5;
    default:
      return 3;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace motiontrim
