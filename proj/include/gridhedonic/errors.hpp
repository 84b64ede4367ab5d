#pragma once

#include <stdexcept>
#include <string>

namespace gridhedonic {

// Process exit status for each error family.
enum class ExitCode : int { ok = 0, io = 1, config = 2, numerical = 3 };

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::config; }
};

#define GRIDHEDONIC_ERROR(Name, Code)                            \
  class Name : public Error {                                    \
   public:                                                       \
    using Error::Error;                                          \
    ExitCode exit_code() const noexcept override { return Code; } \
  };

GRIDHEDONIC_ERROR(InvalidInput, ExitCode::config)
GRIDHEDONIC_ERROR(ConfigError, ExitCode::config)
GRIDHEDONIC_ERROR(CapacityError, ExitCode::config)
GRIDHEDONIC_ERROR(ConversionError, ExitCode::config)
GRIDHEDONIC_ERROR(DegenerateGroup, ExitCode::config)
GRIDHEDONIC_ERROR(DegenerateDesign, ExitCode::numerical)
GRIDHEDONIC_ERROR(InsufficientData, ExitCode::numerical)
GRIDHEDONIC_ERROR(NumericalError, ExitCode::numerical)
GRIDHEDONIC_ERROR(IoError, ExitCode::io)

#undef GRIDHEDONIC_ERROR

}  // namespace gridhedonic
