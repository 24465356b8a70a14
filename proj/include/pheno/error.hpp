#pragma once

#include <stdexcept>
#include <string>

namespace pheno {

/// Failure categories shared by every module. The CLI maps them to exit codes.
enum class ErrorKind {
  MissingColumn,
  NonNumericValue,
  InvalidValue,
  UnknownTreatment,
  UnknownPlant,
  RankDeficient,
  TooFewObservations,
  MissingPredictor,
  NonFiniteLoss,
  TooFewPoints,
  NonIncreasingDays,
  LengthMismatch,
  DegenerateObserved,
  DegenerateInput,
  TooFewRecords,
  NonMonotoneTime,
  ZeroTtsw,
  DegenerateControl,
  NonConvergence,
  InsufficientSpan,
  InsufficientOverlap,
  ConfigInvalid,
  Io,
  Format,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

}  // namespace pheno
