#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace critpop {

enum class ErrorCode {
  NegativeOffDiagonal,
  RowSumNonzero,
  NotIrreducible,
  NotSquare,
  SingularSystem,
  InvalidArgument,
  NonFiniteState,
  StateLeftDomain,
  NonMonotoneTime,
  TooFewBatches,
  NonPositiveValue,
  OutOfDomain,
  SingularAtBoundary,
  ZeroVector,
  UnsupportedModel,
  NoSignChange,
  BudgetExhausted,
  InconclusiveRun,
  ParseError,
  SchemaError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure carries the module and operation that raised it so the CLI
// can report "<module>.<operation>: <message>" without guessing.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, std::string module, std::string operation, const std::string& message)
      : std::runtime_error(module + "." + operation + ": " + std::string(to_string(code)) + ": " +
                           message),
        code_(code), module_(std::move(module)), operation_(std::move(operation)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }
  const std::string& operation() const noexcept { return operation_; }

private:
  ErrorCode code_;
  std::string module_;
  std::string operation_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::NegativeOffDiagonal: return "NegativeOffDiagonal";
  case ErrorCode::RowSumNonzero: return "RowSumNonzero";
  case ErrorCode::NotIrreducible: return "NotIrreducible";
  case ErrorCode::NotSquare: return "NotSquare";
  case ErrorCode::SingularSystem: return "SingularSystem";
  case ErrorCode::InvalidArgument: return "InvalidArgument";
  case ErrorCode::NonFiniteState: return "NonFiniteState";
  case ErrorCode::StateLeftDomain: return "StateLeftDomain";
  case ErrorCode::NonMonotoneTime: return "NonMonotoneTime";
  case ErrorCode::TooFewBatches: return "TooFewBatches";
  case ErrorCode::NonPositiveValue: return "NonPositiveValue";
  case ErrorCode::OutOfDomain: return "OutOfDomain";
  case ErrorCode::SingularAtBoundary: return "SingularAtBoundary";
  case ErrorCode::ZeroVector: return "ZeroVector";
  case ErrorCode::UnsupportedModel: return "UnsupportedModel";
  case ErrorCode::NoSignChange: return "NoSignChange";
  case ErrorCode::BudgetExhausted: return "BudgetExhausted";
  case ErrorCode::InconclusiveRun: return "InconclusiveRun";
  case ErrorCode::ParseError: return "ParseError";
  case ErrorCode::SchemaError: return "SchemaError";
  case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

} // namespace critpop
