// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace colap {

enum class ErrorCode {
  DimensionMismatch,
  ZeroNormVector,
  EmptyInput,
  NonFiniteEvaluation,
  EmptyList,
  ShapeMismatch,
  LabelOutOfRange,
  MissingPairing,
  NoPositiveAvailable,
  InvalidSpec,
  InsufficientInstances,
  MissingParallelTwin,
  EmptyClass,
  MethodEpisodeMismatch,
  EmptyCorpus,
  LayerOutOfRange,
  InvalidConfig,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroNormVector: return "ZeroNormVector";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonFiniteEvaluation: return "NonFiniteEvaluation";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::MissingPairing: return "MissingPairing";
    case ErrorCode::NoPositiveAvailable: return "NoPositiveAvailable";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InsufficientInstances: return "InsufficientInstances";
    case ErrorCode::MissingParallelTwin: return "MissingParallelTwin";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::MethodEpisodeMismatch: return "MethodEpisodeMismatch";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::LayerOutOfRange: return "LayerOutOfRange";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace colap
