#pragma once

#include <stdexcept>
#include <string>

namespace nfr {

enum class ErrorCode {
  ParseError,
  EmptyMesh,
  DegenerateGeometry,
  NotARotation,
  NoVisibleSurface,
  ConvergenceFailure,
  KTooLarge,
  MissingProvenance,
  RankDeficient,
  DimensionMismatch,
  SingularSystem,
  SizeMismatch,
  CountMismatch,
  NonFiniteEntry,
  NoCorrespondences,
  NonFiniteEnergy,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::NotARotation: return "NotARotation";
    case ErrorCode::NoVisibleSurface: return "NoVisibleSurface";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::MissingProvenance: return "MissingProvenance";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::NoCorrespondences: return "NoCorrespondences";
    case ErrorCode::NonFiniteEnergy: return "NonFiniteEnergy";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace nfr
