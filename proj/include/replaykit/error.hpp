#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace replaykit {

enum class ErrorCode {
  // input data
  DuplicateAssetId,
  EmptyCaptions,
  EmptyClassLabel,
  ParseError,
  MissingField,
  HeaderMismatch,
  TruncatedBody,
  DuplicateId,
  SchemaError,
  IoError,
  InvalidArgument,
  InfeasibleBudget,
  NoValidCaptions,
  DegenerateMean,
  MissingEmbedding,
  DimensionMismatch,
  UnresolvedAssetId,
  UnknownClass,
  OverlappingSplits,
  MissingFeature,
  TooFewSamples,
  EigDecompositionFailure,
  DivisionByZero,
  // remote embedding service
  ServiceUnavailable,
  ServiceRejected,
};

enum class ErrorCategory { Data, Service };

std::string_view to_string(ErrorCode code) noexcept;

constexpr ErrorCategory category_of(ErrorCode code) noexcept {
  return (code == ErrorCode::ServiceUnavailable || code == ErrorCode::ServiceRejected)
             ? ErrorCategory::Service
             : ErrorCategory::Data;
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace replaykit
