#pragma once

#include <stdexcept>
#include <string>

namespace sara {

enum class ErrorCode {
  // Usage / configuration.
  InvalidArgument,
  InvalidConfig,
  // Input data.
  MissingFile,
  CorruptFile,
  DimensionMismatch,
  DuplicateImageId,
  UnknownImage,
  NormalizationFailure,
  OutOfBoundsKeypoint,
  IoError,
  // Retrieval.
  TooFewImages,
  InvalidK,
  // Two-view geometry.
  DegenerateConfiguration,
  InsufficientCorrespondences,
  NoModelFound,
  CheiralityAmbiguity,
  // Graph construction.
  EmptyScoreSet,
  // Synthetic scenes and oracles.
  GenerationFailure,
  TooLarge,
};

const char* to_string(ErrorCode code);

// True for errors caused by the caller's arguments rather than the data.
bool is_usage_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sara
