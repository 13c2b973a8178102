#include "sara/error.h"

namespace sara {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DuplicateImageId: return "DuplicateImageId";
    case ErrorCode::UnknownImage: return "UnknownImage";
    case ErrorCode::NormalizationFailure: return "NormalizationFailure";
    case ErrorCode::OutOfBoundsKeypoint: return "OutOfBoundsKeypoint";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::TooFewImages: return "TooFewImages";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::InsufficientCorrespondences: return "InsufficientCorrespondences";
    case ErrorCode::NoModelFound: return "NoModelFound";
    case ErrorCode::CheiralityAmbiguity: return "CheiralityAmbiguity";
    case ErrorCode::EmptyScoreSet: return "EmptyScoreSet";
    case ErrorCode::GenerationFailure: return "GenerationFailure";
    case ErrorCode::TooLarge: return "TooLarge";
  }
  return "Unknown";
}

bool is_usage_error(ErrorCode code) {
  return code == ErrorCode::InvalidArgument || code == ErrorCode::InvalidConfig ||
         code == ErrorCode::InvalidK;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace sara
