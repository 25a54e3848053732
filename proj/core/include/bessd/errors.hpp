#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bessd {

/// Machine-readable category carried by every library exception. The CLI
/// maps these to exit codes and to the `kind` field of its error record.
enum class ErrorKind {
  InvalidArgument,
  OutOfBounds,
  DegenerateThroughput,
  NonConvergence,
  InsufficientData,
  EmptyFeasibleSet,
  NoChildren,
  DeadEnd,
  DivergenceGuard,
  TooLarge,
  SchemaError,
  GapError,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define BESSD_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what)                         \
        : Error(ErrorKind::Name, what) {}                          \
  };

BESSD_DEFINE_ERROR(InvalidArgument)
BESSD_DEFINE_ERROR(OutOfBounds)
BESSD_DEFINE_ERROR(DegenerateThroughput)
BESSD_DEFINE_ERROR(NonConvergence)
BESSD_DEFINE_ERROR(InsufficientData)
BESSD_DEFINE_ERROR(EmptyFeasibleSet)
BESSD_DEFINE_ERROR(NoChildren)
BESSD_DEFINE_ERROR(DeadEnd)
BESSD_DEFINE_ERROR(DivergenceGuard)
BESSD_DEFINE_ERROR(TooLarge)
BESSD_DEFINE_ERROR(SchemaError)
BESSD_DEFINE_ERROR(GapError)
BESSD_DEFINE_ERROR(ConfigError)
BESSD_DEFINE_ERROR(IoError)

#undef BESSD_DEFINE_ERROR

}  // namespace bessd
