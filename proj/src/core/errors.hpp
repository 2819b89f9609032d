#pragma once

#include <stdexcept>
#include <string>

namespace lsr {

enum class ErrorCode {
  kDomain = 1,
  kSyntax,
  kRange,
  kLength,
  kShape,
  kGenerationTimeout,
  kNonFiniteLoss,
  kDegenerate,
  kAllRestartsFailed,
  kIo,
  kInvalidArgument,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define LSR_DEFINE_ERROR(Name, Code)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(ErrorCode::Code, what) {} \
  };

LSR_DEFINE_ERROR(DomainError, kDomain)
LSR_DEFINE_ERROR(SyntaxError, kSyntax)
LSR_DEFINE_ERROR(RangeError, kRange)
LSR_DEFINE_ERROR(LengthError, kLength)
LSR_DEFINE_ERROR(ShapeError, kShape)
LSR_DEFINE_ERROR(GenerationTimeout, kGenerationTimeout)
LSR_DEFINE_ERROR(DegenerateError, kDegenerate)
LSR_DEFINE_ERROR(AllRestartsFailed, kAllRestartsFailed)
LSR_DEFINE_ERROR(IoError, kIo)
LSR_DEFINE_ERROR(InvalidArgument, kInvalidArgument)

#undef LSR_DEFINE_ERROR

// Raised by the training loop; carries the step whose batch produced the value.
class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss(long step, const std::string& what)
      : Error(ErrorCode::kNonFiniteLoss, what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

}  // namespace lsr
