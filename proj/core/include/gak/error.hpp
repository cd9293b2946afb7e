#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gak {

enum class ErrorKind {
  FormatError,
  UnsupportedRank,
  UnsupportedFormat,
  TruncationError,
  IoError,
  InvalidArgument,
  NonFiniteInput,
  DegenerateRow,
  InfeasibleLength,
  EmptyLabels,
  VocabError,
  SequenceMismatch,
  WordMismatch,
  ShapeError,
  NumericalError,
  InvalidEpsilon,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library. what() is "<Kind>: <detail>", so the
/// kind name is always visible to CLI users.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace gak
