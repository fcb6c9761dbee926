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

#ifndef EGAP_RANGE_CODER_HPP
#define EGAP_RANGE_CODER_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "egap/pmf.hpp"

namespace egap {

inline constexpr uint32_t kCoderPrecision = 16;

/// Integer frequencies over a contiguous symbol support, summing to
/// exactly 2^precision with every frequency at least one.
class FreqTable {
public:
  FreqTable(int32_t support_min, std::vector<uint32_t> freqs, uint32_t precision);

  int32_t support_min() const { return support_min_; }
  int32_t support_max() const {
    return support_min_ + static_cast<int32_t>(freqs_.size()) - 1;
  }
  size_t size() const { return freqs_.size(); }
  uint32_t precision() const { return precision_; }
  uint32_t total() const { return 1u << precision_; }
  bool contains(int32_t symbol) const {
    return symbol >= support_min_ && symbol <= support_max();
  }

  uint32_t freq(int32_t symbol) const;
  /// Cumulative frequency of all symbols below `symbol`.
  uint32_t cum(int32_t symbol) const;
  /// The symbol whose cumulative slot holds `target` (0 <= target < total).
  int32_t symbol_at(uint32_t target) const;

  const std::vector<uint32_t>& freqs() const { return freqs_; }

private:
  int32_t support_min_;
  uint32_t precision_;
  std::vector<uint32_t> freqs_;
  std::vector<uint32_t> cum_; // size + 1 entries, cum_[0] = 0, cum_[size] = total
};

/// Largest-remainder quantization: floor(p * 2^precision) with every bin
/// held at one or more, then the leftover distributed to the largest
/// fractional remainders (ties to the lower symbol). Deterministic.
FreqTable quantize_pmf(const PmfTable& pmf, uint32_t precision = kCoderPrecision);

/// Moves integer frequencies to hit `target` exactly: adds one where the
/// remainder key is largest, removes one (never below one) where it is
/// smallest; ties break toward the lower index.
void redistribute_to_total(std::vector<int64_t>& freqs, int64_t target,
                           std::span<const double> remainder);

struct Bitstream {
  std::vector<uint8_t> bytes;
  uint64_t bit_count() const { return uint64_t(bytes.size()) * 8; }
};

/// Ideal cost of the stream under the quantized tables, in bits.
double ideal_bits(const SymbolStream& stream, std::span<const FreqTable> tables);

Bitstream encode(const SymbolStream& stream, std::span<const FreqTable> tables);

/// Decodes table_of.size() symbols. Throws CodingError when the stream is
/// truncated or the code drifts outside every table slot.
std::vector<int32_t> decode(std::span<const uint8_t> bytes, std::span<const FreqTable> tables,
                            std::span<const uint32_t> table_of);

} // namespace egap

#endif
