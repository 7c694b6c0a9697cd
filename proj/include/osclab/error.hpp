#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace osclab {

enum class ErrorKind {
  EmptyInterval,
  ZeroDim,
  BadCut,
  NearSingular,
  DegenerateSpectrum,
  NonpositiveK,
  DimensionMismatch,
  BlockMismatch,
  KTooSmall,
  TooLarge,
  NoMatch,
  AmbiguousMatch,
  CutoffTooSmall,
  ConfigError,
  AllSamplesRejected,
  RejectionCapExceeded,
  InsufficientData,
  NonpositiveMean,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Failure raised by every module. The kind is stable and machine readable;
/// the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace osclab
