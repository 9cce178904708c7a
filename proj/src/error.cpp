#include "replaykit/error.hpp"

namespace replaykit {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DuplicateAssetId: return "DuplicateAssetId";
    case ErrorCode::EmptyCaptions: return "EmptyCaptions";
    case ErrorCode::EmptyClassLabel: return "EmptyClassLabel";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::HeaderMismatch: return "HeaderMismatch";
    case ErrorCode::TruncatedBody: return "TruncatedBody";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InfeasibleBudget: return "InfeasibleBudget";
    case ErrorCode::NoValidCaptions: return "NoValidCaptions";
    case ErrorCode::DegenerateMean: return "DegenerateMean";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnresolvedAssetId: return "UnresolvedAssetId";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::OverlappingSplits: return "OverlappingSplits";
    case ErrorCode::MissingFeature: return "MissingFeature";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::EigDecompositionFailure: return "EigDecompositionFailure";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::ServiceUnavailable: return "ServiceUnavailable";
    case ErrorCode::ServiceRejected: return "ServiceRejected";
  }
  return "Unknown";
}

}  // namespace replaykit
