// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace inrvc {

enum class ErrorCode {
  kContractViolation = 1,
  kShapeMismatch,
  kOutOfRange,
  kNonFinite,
  kBadMagic,
  kUnsupportedVersion,
  kChecksumMismatch,
  kTruncated,
  kUnsupportedFormat,
  kArchitectureMismatch,
  kInvalidConfig,
  kIo,
};

/// Stable machine-readable name, used by the CLI's JSON error output.
std::string_view error_code_name(ErrorCode code);

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

inline void require(bool condition, ErrorCode code, const char* message) {
  if (!condition) fail(code, message);
}

}  // namespace inrvc
