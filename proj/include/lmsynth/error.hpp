#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lmsynth {

enum class ErrorCode {
  InvalidK,
  DegenerateFrame,
  WrongLength,
  NonFinite,
  UnknownAttribute,
  ShapeMismatch,
  NonScalarLoss,
  IdentityCollision,
  UnknownClass,
  DatasetTooSmall,
  OddDimension,
  ZeroEmbedding,
  ZeroVector,
  EmptyIdentity,
  NoEligibleIdentity,
  DimensionMismatch,
  InvalidArgument,
  ConfigError,
  FormatError,
  UnsupportedVersion,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Process exit code for a failure of the given kind: 2 config, 3 data, 4 numeric.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace lmsynth
