#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tagrank {

enum class ErrorCode {
  kParseError,
  kDuplicateId,
  kEmptyDescriptors,
  kSeparatorInDescriptor,
  kAllEmpty,
  kNoTokens,
  kEmptyInput,
  kProviderUnavailable,
  kProviderError,
  kDimMismatch,
  kNonFiniteValue,
  kBadMagic,
  kUnsupportedVersion,
  kTruncatedFile,
  kIdCountMismatch,
  kIo,
  kInvalidArgument,
};

const char* to_string(ErrorCode code);

// All library failures surface as this type. `line()` is 1-based and 0 when
// the error is not tied to a line of an input file.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::size_t line = 0)
      : std::runtime_error(message), code_(code), line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::size_t line_;
};

}  // namespace tagrank
