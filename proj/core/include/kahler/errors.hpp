#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kahler {

enum class ErrorKind {
  InvalidInput,
  SingularMetric,
  InsufficientJet,
  UnsupportedDimension,
  OutOfDomain,
  Domain,
  ProportionalSolution,
  NoProjector,
  InconsistentProjector,
  DegenerateMetric,
  UnsupportedModel,
  Config,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (and the
/// CLI exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::SingularMetric: return "singular-metric";
    case ErrorKind::InsufficientJet: return "insufficient-jet";
    case ErrorKind::UnsupportedDimension: return "unsupported-dimension";
    case ErrorKind::OutOfDomain: return "out-of-domain";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::ProportionalSolution: return "proportional-solution";
    case ErrorKind::NoProjector: return "no-projector";
    case ErrorKind::InconsistentProjector: return "inconsistent-projector";
    case ErrorKind::DegenerateMetric: return "degenerate-metric";
    case ErrorKind::UnsupportedModel: return "unsupported-model";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

}  // namespace kahler
