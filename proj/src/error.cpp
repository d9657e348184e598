#include "lmsynth/error.hpp"

namespace lmsynth {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::DegenerateFrame: return "DegenerateFrame";
    case ErrorCode::WrongLength: return "WrongLength";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::UnknownAttribute: return "UnknownAttribute";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonScalarLoss: return "NonScalarLoss";
    case ErrorCode::IdentityCollision: return "IdentityCollision";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::DatasetTooSmall: return "DatasetTooSmall";
    case ErrorCode::OddDimension: return "OddDimension";
    case ErrorCode::ZeroEmbedding: return "ZeroEmbedding";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::EmptyIdentity: return "EmptyIdentity";
    case ErrorCode::NoEligibleIdentity: return "NoEligibleIdentity";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidK:
    case ErrorCode::UnknownAttribute:
      return 2;
    case ErrorCode::NonFinite:
      return 4;
    default:
      return 3;
  }
}

}  // namespace lmsynth
