#pragma once

#include <stdexcept>
#include <string>

namespace motiontrim {

enum class ErrorKind {
  // frame_io
  EmptyDirectory,
  DimensionMismatch,
  UnsupportedFormat,
  MissingFrame,
  IndexOutOfRange,
  CorruptFile,
  IoError,
  // features / layers
  InsufficientHistory,
  OutOfBounds,
  NoEligibleFrames,
  SizeMismatch,
  EmptySampleSet,
  NonFiniteLoss,
  // trimming / anomaly scoring
  EmptySelection,
  InsufficientFrames,
  RangeTooShort,
  ParseError,
  RaggedRows,
  MissingPolarity,
  InconsistentMap,
  // pipeline
  ConfigError,
  CheckpointMismatch,
  Locked,
};

const char* to_string(ErrorKind kind);

/// Process exit code for an error: 2 config, 3 data, 4 numeric, 5 empty selection.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace motiontrim
