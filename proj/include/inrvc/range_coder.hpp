// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace inrvc {

inline constexpr std::size_t kAlphabetSize = 64;

/// Adaptive order-0 frequency model: counts start at 1, grow by 1 per coded
/// symbol and are halved (floor, min 1) once the total exceeds 2^16.
class AdaptiveModel {
 public:
  AdaptiveModel();
  std::uint32_t total() const { return total_; }
  std::uint32_t freq(std::size_t s) const { return freq_[s]; }
  std::uint32_t cumulative(std::size_t s) const;
  /// Symbol whose cumulative interval contains `target` (< total()).
  std::size_t find(std::uint32_t target, std::uint32_t& cum_out) const;
  void update(std::size_t s);

 private:
  std::uint32_t freq_[kAlphabetSize];
  std::uint32_t total_;
};

/// Carry-propagating range coder, 32-bit range, byte renormalization.
/// An empty input encodes to the 5-byte flush.
std::vector<std::uint8_t> range_encode(std::span<const std::uint8_t> symbols);
std::vector<std::uint8_t> range_decode(std::span<const std::uint8_t> bytes, std::size_t count);

}  // namespace inrvc
