#include "bessd/errors.hpp"

namespace bessd {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::OutOfBounds: return "OutOfBounds";
    case ErrorKind::DegenerateThroughput: return "DegenerateThroughput";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::EmptyFeasibleSet: return "EmptyFeasibleSet";
    case ErrorKind::NoChildren: return "NoChildren";
    case ErrorKind::DeadEnd: return "DeadEnd";
    case ErrorKind::DivergenceGuard: return "DivergenceGuard";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::GapError: return "GapError";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace bessd
