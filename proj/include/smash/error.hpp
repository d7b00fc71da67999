#pragma once

#include <stdexcept>
#include <string>

namespace smash {

enum class ErrorCode {
  kInvalidArgument = 1,
  kDimensionMismatch,
  kOutOfBounds,
  kParse,
  kIo,
  kCapacity,
  kWindowOverflow,
  kDeadlock,
  kUnmappedAddress,
  kVerification,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace smash
