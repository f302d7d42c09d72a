#pragma once

#include <stdexcept>
#include <string>

namespace les {

/// Failure categories shared by the C++ core and the C API.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kDimensionMismatch = 2,
  kShapeMismatch = 3,
  kIncompatibleRhs = 4,
  kBlowUp = 5,
  kNonFiniteGradient = 6,
  kInsufficientWindow = 7,
  kIo = 8,
  kFormat = 9,
  kInternal = 99,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace les
