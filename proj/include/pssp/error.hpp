#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pssp {

enum class ErrorKind {
  LengthMismatch,
  UnknownLabelChar,
  MalformedRecord,
  MalformedInput,
  EmptyDataset,
  DegenerateSplit,
  CoverageGap,
  ShapeMismatch,
  IndexOutOfRange,
  OddDimension,
  AllIgnored,
  InvalidConfig,
  StaleCache,
  NonFiniteLoss,
  CorruptCheckpoint,
  VersionMismatch,
  IoFailure,
  EmptyMatrix,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every checked failure in the library is reported through this type; the
/// kind distinguishes the contract that was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// create_directories that reports failure as IoFailure.
void ensure_directory(const std::filesystem::path& dir);

}  // namespace pssp
