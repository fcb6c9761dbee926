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

#include "egap/range_coder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace egap {

namespace {

// 64-bit low/range carry-propagating coder, byte renormalization at 2^56.
// With precision <= 16 the per-symbol base range>>precision keeps at least
// 40 significant bits, so the truncation loss stays far below one bit per
// stream; the measured overhead is the leading guard byte plus the flush.
constexpr uint64_t kRenormBound = uint64_t(1) << 56;

class RangeEncoder {
public:
  RangeEncoder() : out_(1, 0) {} // guard byte: absorbs any carry walk-back

  void put(uint32_t cum, uint32_t freq, uint32_t precision) {
    renorm();
    uint64_t base = range_ >> precision;
    uint64_t prev = low_;
    low_ += base * cum;
    if (low_ < prev) carry();
    range_ = base * freq;
  }

  std::vector<uint8_t> finish() {
    renorm();
    // Land on a code point whose unwritten tail bits are all zero; the
    // decoder regenerates them as virtual zero bytes.
    if (range_ > (uint64_t(1) << 57)) {
      emit_top(uint64_t(1) << 56, 1);
    } else {
      emit_top(uint64_t(1) << 48, 2);
    }
    return std::move(out_);
  }

private:
  void emit_top(uint64_t step, int nbytes) {
    uint64_t prev = low_;
    uint64_t code = low_ + step;
    if (code < prev) carry();
    code &= ~(step - 1);
    for (int i = 0; i < nbytes; ++i)
      out_.push_back(static_cast<uint8_t>(code >> (56 - 8 * i)));
  }
  void carry() {
    for (size_t i = out_.size(); i-- > 0;) {
      if (++out_[i] != 0) return;
    }
  }
  void renorm() {
    while (range_ < kRenormBound) {
      out_.push_back(static_cast<uint8_t>(low_ >> 56));
      low_ <<= 8;
      range_ <<= 8;
    }
  }

  std::vector<uint8_t> out_;
  uint64_t low_ = 0;
  uint64_t range_ = ~uint64_t(0);
};

class RangeDecoder {
public:
  explicit RangeDecoder(std::span<const uint8_t> bytes) : bytes_(bytes) {
    if (bytes_.empty()) throw CodingError("range decoder: empty stream");
    pos_ = 1; // guard byte
    for (int i = 0; i < 8; ++i) window_ = (window_ << 8) | next_byte();
  }

  uint32_t begin(const FreqTable& table) {
    renorm();
    base_ = range_ >> table.precision();
    uint64_t target = window_ / base_;
    if (target >= table.total())
      throw CodingError("range decoder: code outside table at symbol " +
                        std::to_string(decoded_));
    return static_cast<uint32_t>(target);
  }

  void consume(uint32_t cum, uint32_t freq) {
    window_ -= base_ * cum;
    range_ = base_ * freq;
    ++decoded_;
  }

private:
  uint8_t next_byte() {
    if (pos_ < bytes_.size()) return bytes_[pos_++];
    if (++virtual_reads_ > 8)
      throw CodingError("range decoder: stream truncated after byte " +
                        std::to_string(bytes_.size()));
    return 0;
  }
  void renorm() {
    while (range_ < kRenormBound) {
      window_ = (window_ << 8) | next_byte();
      range_ <<= 8;
    }
  }

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
  unsigned virtual_reads_ = 0;
  uint64_t window_ = 0; // code minus low
  uint64_t range_ = ~uint64_t(0);
  uint64_t base_ = 0;
  uint64_t decoded_ = 0;
};

} // namespace

FreqTable::FreqTable(int32_t support_min, std::vector<uint32_t> freqs, uint32_t precision)
    : support_min_(support_min), precision_(precision), freqs_(std::move(freqs)) {
  if (precision_ < 1 || precision_ > 24)
    throw ConfigError("freq table: precision out of range");
  if (freqs_.empty()) throw ConfigError("freq table: empty support");
  if (freqs_.size() > total()) throw ConfigError("freq table: more symbols than slots");
  cum_.resize(freqs_.size() + 1, 0);
  uint64_t run = 0;
  for (size_t i = 0; i < freqs_.size(); ++i) {
    if (freqs_[i] == 0) throw ConfigError("freq table: zero frequency");
    run += freqs_[i];
    cum_[i + 1] = static_cast<uint32_t>(run);
  }
  if (run != total())
    throw ConfigError("freq table: frequencies sum to " + std::to_string(run) +
                      ", expected " + std::to_string(total()));
}

uint32_t FreqTable::freq(int32_t symbol) const {
  if (!contains(symbol))
    throw CodingError("symbol " + std::to_string(symbol) + " outside coded support [" +
                      std::to_string(support_min_) + ", " + std::to_string(support_max()) + "]");
  return freqs_[static_cast<size_t>(int64_t(symbol) - support_min_)];
}

uint32_t FreqTable::cum(int32_t symbol) const {
  if (!contains(symbol))
    throw CodingError("symbol " + std::to_string(symbol) + " outside coded support [" +
                      std::to_string(support_min_) + ", " + std::to_string(support_max()) + "]");
  return cum_[static_cast<size_t>(int64_t(symbol) - support_min_)];
}

int32_t FreqTable::symbol_at(uint32_t target) const {
  if (target >= total()) throw CodingError("cumulative target outside table");
  auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
  return support_min_ + static_cast<int32_t>(it - cum_.begin()) - 1;
}

void redistribute_to_total(std::vector<int64_t>& freqs, int64_t target,
                           std::span<const double> remainder) {
  if (remainder.size() != freqs.size())
    throw ConfigError("redistribute: remainder keys not aligned");
  if (target < static_cast<int64_t>(freqs.size()))
    throw ConfigError("redistribute: target below one slot per symbol");
  int64_t sum = std::accumulate(freqs.begin(), freqs.end(), int64_t(0));

  std::vector<size_t> order(freqs.size());
  std::iota(order.begin(), order.end(), 0);
  if (sum < target) {
    // Add where the remainder is largest.
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
      return a < b;
    });
    size_t i = 0;
    while (sum < target) {
      ++freqs[order[i]];
      ++sum;
      i = (i + 1) % order.size();
    }
  } else if (sum > target) {
    // Remove where the remainder is smallest, never dropping below one.
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      if (remainder[a] != remainder[b]) return remainder[a] < remainder[b];
      return a < b;
    });
    size_t i = 0;
    size_t stuck = 0;
    while (sum > target) {
      if (freqs[order[i]] > 1) {
        --freqs[order[i]];
        --sum;
        stuck = 0;
      } else if (++stuck > order.size()) {
        throw ConfigError("redistribute: cannot reach target"); // unreachable given pre
      }
      i = (i + 1) % order.size();
    }
  }
}

FreqTable quantize_pmf(const PmfTable& pmf, uint32_t precision) {
  if (precision < 1 || precision > 24) throw ConfigError("quantize_pmf: precision out of range");
  uint64_t total = uint64_t(1) << precision;
  if (pmf.size() > total)
    throw ConfigError("quantize_pmf: support of " + std::to_string(pmf.size()) +
                      " symbols cannot fit " + std::to_string(total) + " slots");
  std::vector<int64_t> freqs(pmf.size());
  std::vector<double> remainder(pmf.size());
  for (size_t i = 0; i < pmf.size(); ++i) {
    double raw = pmf.probs()[i] * static_cast<double>(total);
    double fl = std::floor(raw);
    freqs[i] = std::max<int64_t>(1, static_cast<int64_t>(fl));
    remainder[i] = raw - fl;
  }
  redistribute_to_total(freqs, static_cast<int64_t>(total), remainder);
  std::vector<uint32_t> out(freqs.size());
  for (size_t i = 0; i < freqs.size(); ++i) out[i] = static_cast<uint32_t>(freqs[i]);
  return FreqTable(pmf.support_min(), std::move(out), precision);
}

double ideal_bits(const SymbolStream& stream, std::span<const FreqTable> tables) {
  double bits = 0.0;
  for (size_t i = 0; i < stream.symbols.size(); ++i) {
    uint32_t t = stream.table_of[i];
    if (t >= tables.size())
      throw ConfigError("ideal_bits: table index " + std::to_string(t) + " out of range");
    const FreqTable& table = tables[t];
    bits += static_cast<double>(table.precision()) -
            std::log2(static_cast<double>(table.freq(stream.symbols[i])));
  }
  return bits;
}

Bitstream encode(const SymbolStream& stream, std::span<const FreqTable> tables) {
  if (stream.table_of.size() != stream.symbols.size())
    throw ConfigError("encode: table assignment not aligned with symbols");
  RangeEncoder enc;
  for (size_t i = 0; i < stream.symbols.size(); ++i) {
    uint32_t t = stream.table_of[i];
    if (t >= tables.size())
      throw ConfigError("encode: table index " + std::to_string(t) + " out of range");
    const FreqTable& table = tables[t];
    int32_t sym = stream.symbols[i];
    enc.put(table.cum(sym), table.freq(sym), table.precision());
  }
  return Bitstream{enc.finish()};
}

std::vector<int32_t> decode(std::span<const uint8_t> bytes, std::span<const FreqTable> tables,
                            std::span<const uint32_t> table_of) {
  RangeDecoder dec(bytes);
  std::vector<int32_t> out(table_of.size());
  for (size_t i = 0; i < table_of.size(); ++i) {
    uint32_t t = table_of[i];
    if (t >= tables.size())
      throw ConfigError("decode: table index " + std::to_string(t) + " out of range");
    const FreqTable& table = tables[t];
    uint32_t target = dec.begin(table);
    int32_t sym = table.symbol_at(target);
    dec.consume(table.cum(sym), table.freq(sym));
    out[i] = sym;
  }
  return out;
}

} // namespace egap
