/* Copyright 2026 the egap authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef EGAP_BITS_HPP
#define EGAP_BITS_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "egap/error.hpp"

namespace egap {

// All multi-byte fields are little-endian.

class ByteWriter {
public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) { le(v, 2); }
  void u32(uint32_t v) { le(v, 4); }
  void u64(uint64_t v) { le(v, 8); }
  void i32(int32_t v) { le(static_cast<uint32_t>(v), 4); }
  void f32(float v) { le(std::bit_cast<uint32_t>(v), 4); }
  void f64(double v) { le(std::bit_cast<uint64_t>(v), 8); }
  void bytes(std::span<const uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void tag(const char (&m)[5]) { buf_.insert(buf_.end(), m, m + 4); }

  size_t size() const { return buf_.size(); }
  const std::vector<uint8_t>& data() const { return buf_; }
  std::vector<uint8_t> take() { return std::move(buf_); }

private:
  void le(uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  std::vector<uint8_t> buf_;
};

/// Bounds-checked little-endian reader. Failures name the enclosing
/// chunk and the byte offset where the read started.
class ByteReader {
public:
  explicit ByteReader(std::span<const uint8_t> data, std::string chunk = "stream")
      : data_(data), chunk_(std::move(chunk)) {}

  size_t offset() const { return pos_; }
  size_t remaining() const { return data_.size() - pos_; }
  void set_chunk(std::string chunk) { chunk_ = std::move(chunk); }
  const std::string& chunk() const { return chunk_; }

  uint8_t u8() { return static_cast<uint8_t>(le(1)); }
  uint16_t u16() { return static_cast<uint16_t>(le(2)); }
  uint32_t u32() { return static_cast<uint32_t>(le(4)); }
  uint64_t u64() { return le(8); }
  int32_t i32() { return static_cast<int32_t>(le(4)); }
  float f32() { return std::bit_cast<float>(static_cast<uint32_t>(le(4))); }
  double f64() { return std::bit_cast<double>(le(8)); }

  std::span<const uint8_t> bytes(size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  bool tag_matches(const char (&m)[5]) {
    need(4);
    bool ok = std::memcmp(data_.data() + pos_, m, 4) == 0;
    pos_ += 4;
    return ok;
  }

  void expect_end() const {
    if (pos_ != data_.size())
      throw ParseError(chunk_ + ": " + std::to_string(data_.size() - pos_) +
                       " trailing byte(s) at offset " + std::to_string(pos_));
  }

private:
  void need(size_t n) const {
    if (data_.size() - pos_ < n)
      throw ParseError(chunk_ + ": truncated at offset " + std::to_string(pos_) + " (need " +
                       std::to_string(n) + " byte(s), have " + std::to_string(remaining()) + ")");
  }
  uint64_t le(int n) {
    need(static_cast<size_t>(n));
    uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += static_cast<size_t>(n);
    return v;
  }

  std::span<const uint8_t> data_;
  std::string chunk_;
  size_t pos_ = 0;
};

/// MSB-first bit packer for selection bitmaps and parameter indices.
class BitWriter {
public:
  void bit(bool b) {
    if (fill_ == 0) buf_.push_back(0);
    if (b) buf_.back() |= static_cast<uint8_t>(1u << (7 - fill_));
    fill_ = (fill_ + 1) & 7;
    ++bits_;
  }
  void bits(uint64_t v, unsigned n) {
    for (unsigned i = n; i-- > 0;) bit((v >> i) & 1u);
  }
  uint64_t bit_count() const { return bits_; }
  /// Pads the final partial byte with zeros.
  std::vector<uint8_t> take() {
    fill_ = 0;
    bits_ = 0;
    return std::move(buf_);
  }

private:
  std::vector<uint8_t> buf_;
  unsigned fill_ = 0;
  uint64_t bits_ = 0;
};

class BitReader {
public:
  explicit BitReader(std::span<const uint8_t> data, std::string chunk = "bit section")
      : data_(data), chunk_(std::move(chunk)) {}

  bool bit() {
    if (pos_ >= data_.size() * 8)
      throw ParseError(chunk_ + ": truncated at bit " + std::to_string(pos_));
    bool b = (data_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1u;
    ++pos_;
    return b;
  }
  uint64_t bits(unsigned n) {
    uint64_t v = 0;
    for (unsigned i = 0; i < n; ++i) v = (v << 1) | (bit() ? 1u : 0u);
    return v;
  }
  uint64_t bit_offset() const { return pos_; }

private:
  std::span<const uint8_t> data_;
  std::string chunk_;
  uint64_t pos_ = 0;
};

} // namespace egap

#endif
