// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "inrvc/range_coder.hpp"

#include <string>

#include "inrvc/error.hpp"

namespace inrvc {

namespace {

constexpr std::uint32_t kTop = 1u << 24;
constexpr std::uint32_t kMaxTotal = 1u << 16;

class Encoder {
 public:
  void encode(std::uint32_t cum, std::uint32_t freq, std::uint32_t total) {
    const std::uint32_t r = range_ / total;
    low_ += static_cast<std::uint64_t>(r) * cum;
    range_ = r * freq;
    while (range_ < kTop) {
      range_ <<= 8;
      shift_low();
    }
  }

  std::vector<std::uint8_t> finish() {
    for (int i = 0; i < 5; ++i) shift_low();
    return std::move(out_);
  }

 private:
  void shift_low() {
    if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
      const auto carry = static_cast<std::uint8_t>(low_ >> 32);
      std::uint8_t temp = cache_;
      do {
        out_.push_back(static_cast<std::uint8_t>(temp + carry));
        temp = 0xFF;
      } while (--cache_size_ != 0);
      cache_ = static_cast<std::uint8_t>(low_ >> 24);
    }
    ++cache_size_;
    low_ = (low_ & 0x00FFFFFFu) << 8;
  }

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::vector<std::uint8_t> out_;
};

class Decoder {
 public:
  explicit Decoder(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
    for (int i = 0; i < 5; ++i) code_ = (code_ << 8) | next();
  }

  std::size_t decode(const AdaptiveModel& model) {
    const std::uint32_t r = range_ / model.total();
    const std::uint32_t target = code_ / r;
    if (target >= model.total()) fail(ErrorCode::kTruncated, "range_decode: corrupt payload");
    std::uint32_t cum = 0;
    const std::size_t s = model.find(target, cum);
    code_ -= cum * r;
    range_ = r * model.freq(s);
    while (range_ < kTop) {
      code_ = (code_ << 8) | next();
      range_ <<= 8;
    }
    return s;
  }

  std::size_t consumed() const { return pos_; }

 private:
  std::uint32_t next() {
    if (pos_ >= bytes_.size()) fail(ErrorCode::kTruncated, "range_decode: payload truncated");
    return bytes_[pos_++];
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
};

}  // namespace

AdaptiveModel::AdaptiveModel() : total_(kAlphabetSize) {
  for (auto& f : freq_) f = 1;
}

std::uint32_t AdaptiveModel::cumulative(std::size_t s) const {
  std::uint32_t c = 0;
  for (std::size_t i = 0; i < s; ++i) c += freq_[i];
  return c;
}

std::size_t AdaptiveModel::find(std::uint32_t target, std::uint32_t& cum_out) const {
  std::uint32_t c = 0;
  for (std::size_t s = 0; s < kAlphabetSize; ++s) {
    if (target < c + freq_[s]) {
      cum_out = c;
      return s;
    }
    c += freq_[s];
  }
  fail(ErrorCode::kContractViolation, "AdaptiveModel::find: target beyond total");
}

void AdaptiveModel::update(std::size_t s) {
  ++freq_[s];
  ++total_;
  if (total_ > kMaxTotal) {
    total_ = 0;
    for (auto& f : freq_) {
      f = f / 2 > 0 ? f / 2 : 1;
      total_ += f;
    }
  }
}

std::vector<std::uint8_t> range_encode(std::span<const std::uint8_t> symbols) {
  AdaptiveModel model;
  Encoder enc;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const std::uint8_t s = symbols[i];
    if (s >= kAlphabetSize) {
      fail(ErrorCode::kOutOfRange, "range_encode: symbol " + std::to_string(s) + " at " +
                                       std::to_string(i) + " outside the 64-symbol alphabet");
    }
    enc.encode(model.cumulative(s), model.freq(s), model.total());
    model.update(s);
  }
  return enc.finish();
}

std::vector<std::uint8_t> range_decode(std::span<const std::uint8_t> bytes, std::size_t count) {
  AdaptiveModel model;
  Decoder dec(bytes);
  std::vector<std::uint8_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t s = dec.decode(model);
    out.push_back(static_cast<std::uint8_t>(s));
    model.update(s);
  }
  if (dec.consumed() != bytes.size()) {
    fail(ErrorCode::kTruncated, "range_decode: " + std::to_string(bytes.size() - dec.consumed()) +
                                    " unconsumed payload bytes");
  }
  return out;
}

}  // namespace inrvc
