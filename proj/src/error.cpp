#include "thir/error.hpp"

namespace thir {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::FileNotFound: return "FileNotFound";
    case ErrorKind::DecodeError: return "DecodeError";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::ManifestParseError: return "ManifestParseError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyIndex: return "EmptyIndex";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::EmptyNeighborList: return "EmptyNeighborList";
    case ErrorKind::BuildError: return "BuildError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Error";
}

}  // namespace thir
