// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "inrvc/error.hpp"

namespace inrvc {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kContractViolation: return "contract_violation";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kOutOfRange: return "out_of_range";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kUnsupportedVersion: return "unsupported_version";
    case ErrorCode::kChecksumMismatch: return "checksum_mismatch";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kUnsupportedFormat: return "unsupported_format";
    case ErrorCode::kArchitectureMismatch: return "architecture_mismatch";
    case ErrorCode::kInvalidConfig: return "invalid_config";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

}  // namespace inrvc
