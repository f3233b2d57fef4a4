#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace s2cubic {

enum class ErrorKind {
  InvalidArgument,
  OutOfWindow,
  NonFiniteRhs,
  DerivativeSingular,
  DenominatorVanished,
  BlowUp,
  StepLimitReached,
  OutOfDomain,
  DomainExceeded,
  BadBracket,
  BudgetExhausted,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::OutOfWindow: return "OutOfWindow";
    case ErrorKind::NonFiniteRhs: return "NonFiniteRhs";
    case ErrorKind::DerivativeSingular: return "DerivativeSingular";
    case ErrorKind::DenominatorVanished: return "DenominatorVanished";
    case ErrorKind::BlowUp: return "BlowUp";
    case ErrorKind::StepLimitReached: return "StepLimitReached";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::DomainExceeded: return "DomainExceeded";
    case ErrorKind::BadBracket: return "BadBracket";
    case ErrorKind::BudgetExhausted: return "BudgetExhausted";
  }
  return "Unknown";
}

/// Every failure raised by the library. The kind is what callers branch on;
/// the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace s2cubic
