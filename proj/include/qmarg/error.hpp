#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qmarg {

enum class ErrorKind {
  NotHermitian,
  NoConvergence,
  ShapeMismatch,
  NotPositiveDefinite,
  InvalidState,
  SpectraMismatch,
  AncillaTooSmall,
  Incompatible,
  IncompatibleMarginals,
  InvalidEnsemble,
  NotPSD,
  NegativeSymbol,
  SmallDenominator,
  WrongDimension,
  DegenerateChoice,
  CertificateDegenerate,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind);

// Every library failure is reported through this type. `value` carries the
// offending quantity where one exists (a distance, an eigenvalue, a node index).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail, double value = 0.0);

  ErrorKind kind() const noexcept { return kind_; }
  double value() const noexcept { return value_; }

 private:
  ErrorKind kind_;
  double value_;
};

}  // namespace qmarg
