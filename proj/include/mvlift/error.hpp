#pragma once

#include <stdexcept>
#include <string>

namespace mvlift {

enum class ErrorCode {
  kInvalidInput,
  kDegenerateDepth,
  kMissingRoot,
  kEmptyDataset,
  kShape,
  kState,
  kInvalidFrame,
  kInsufficientViews,
  kDegenerateConfiguration,
  kEmptyReconstruction,
  kInsufficientSequences,
  kParse,
  kUndefinedMetric,
  kTraining,
  kIo,
};

const char* to_string(ErrorCode code);

// All library failures are reported through this type; `code()` identifies
// the failure class so callers (and the CLI exit-code mapping) can branch.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mvlift
