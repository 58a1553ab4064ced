#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fracfield {

enum class ErrorKind {
  EmptyMask,
  BadShapeParams,
  EigSolveFailure,
  DomainMismatch,
  IntegrationFailure,
  QuadratureFailure,
  NonpositiveField,
  AllStartsFailed,
  NonmonotoneLevels,
  BallDoesNotFit,
  ConstraintViolated,
  OffManifold,
  UnknownDomainTopology,
  ConfigInvalid,
  TaskFailed,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::EmptyMask: return "EmptyMask";
    case ErrorKind::BadShapeParams: return "BadShapeParams";
    case ErrorKind::EigSolveFailure: return "EigSolveFailure";
    case ErrorKind::DomainMismatch: return "DomainMismatch";
    case ErrorKind::IntegrationFailure: return "IntegrationFailure";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::NonpositiveField: return "NonpositiveField";
    case ErrorKind::AllStartsFailed: return "AllStartsFailed";
    case ErrorKind::NonmonotoneLevels: return "NonmonotoneLevels";
    case ErrorKind::BallDoesNotFit: return "BallDoesNotFit";
    case ErrorKind::ConstraintViolated: return "ConstraintViolated";
    case ErrorKind::OffManifold: return "OffManifold";
    case ErrorKind::UnknownDomainTopology: return "UnknownDomainTopology";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::TaskFailed: return "TaskFailed";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above so
/// callers (and the CLI exit-code mapping) can dispatch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fracfield
