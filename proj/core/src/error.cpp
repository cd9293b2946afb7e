#include "gak/error.hpp"

namespace gak {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::UnsupportedRank: return "UnsupportedRank";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::TruncationError: return "TruncationError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::DegenerateRow: return "DegenerateRow";
    case ErrorKind::InfeasibleLength: return "InfeasibleLength";
    case ErrorKind::EmptyLabels: return "EmptyLabels";
    case ErrorKind::VocabError: return "VocabError";
    case ErrorKind::SequenceMismatch: return "SequenceMismatch";
    case ErrorKind::WordMismatch: return "WordMismatch";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::NumericalError: return "NumericalError";
    case ErrorKind::InvalidEpsilon: return "InvalidEpsilon";
  }
  return "Error";
}

Error::Error(ErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
      kind_(kind),
      detail_(detail) {}

}  // namespace gak
