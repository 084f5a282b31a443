#include "pssp/error.hpp"

namespace pssp {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::UnknownLabelChar: return "UnknownLabelChar";
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::MalformedInput: return "MalformedInput";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::DegenerateSplit: return "DegenerateSplit";
    case ErrorKind::CoverageGap: return "CoverageGap";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::OddDimension: return "OddDimension";
    case ErrorKind::AllIgnored: return "AllIgnored";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::StaleCache: return "StaleCache";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::EmptyMatrix: return "EmptyMatrix";
  }
  return "Unknown";
}

void ensure_directory(const std::filesystem::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoFailure, "cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace pssp
