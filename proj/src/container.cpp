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

#include "egap/container.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "egap/bits.hpp"

namespace egap {

namespace {

constexpr uint16_t kContainerVersion = 1;
constexpr uint64_t kMaxVolume = uint64_t(1) << 32;

uint32_t expected_index_count(const MethodConfig& config) {
  switch (config.method) {
    case AdaptMethod::None: return 0;
    case AdaptMethod::Gmm: return 3 * config.k;
    case AdaptMethod::ZeroMean:
    case AdaptMethod::CenterBin: return 1;
  }
  throw ConfigError("unknown adaptation method");
}

void check_record_layout(const AdaptationRecord& rec) {
  const uint32_t want = expected_index_count(rec.config);
  for (const auto& ta : rec.targeted) {
    if (ta.selected && ta.indices.size() != want)
      throw ConfigError("selection record: table " + std::to_string(ta.table) + " carries " +
                        std::to_string(ta.indices.size()) + " indices, layout needs " +
                        std::to_string(want));
  }
}

void write_method_block(ByteWriter& w, const AdaptationRecord& rec) {
  if (rec.config.k > 255) throw ConfigError("mixture size does not fit the header field");
  w.u8(static_cast<uint8_t>(rec.config.method));
  w.u8(static_cast<uint8_t>(rec.config.k));
  w.u32(static_cast<uint32_t>(rec.targeted.size()));
  for (const auto& ta : rec.targeted) w.u32(ta.table);
}

struct BlockInfo {
  MethodConfig config;
  std::vector<uint32_t> ids;
};

BlockInfo read_method_block(ByteReader& r, size_t table_count, uint32_t param_bits,
                            const std::string& name) {
  BlockInfo block;
  const size_t at = r.offset();
  const uint8_t method = r.u8();
  if (method > static_cast<uint8_t>(AdaptMethod::CenterBin))
    throw ParseError(r.chunk() + ": unknown adaptation method " + std::to_string(method) +
                     " in " + name + " at offset " + std::to_string(at));
  block.config.method = static_cast<AdaptMethod>(method);
  block.config.k = r.u8();
  if (block.config.method == AdaptMethod::Gmm && block.config.k == 0)
    throw ParseError(r.chunk() + ": zero mixture size in " + name);
  const uint32_t targeted = r.u32();
  if (block.config.method == AdaptMethod::None && targeted != 0)
    throw ParseError(r.chunk() + ": " + name + " targets tables without a method");
  if (targeted > table_count)
    throw ParseError(r.chunk() + ": " + name + " targets " + std::to_string(targeted) +
                     " of " + std::to_string(table_count) + " tables");
  block.config.top_tables = targeted;
  block.config.param_bits = param_bits;
  std::vector<bool> seen(table_count, false);
  block.ids.reserve(targeted);
  for (uint32_t i = 0; i < targeted; ++i) {
    const uint32_t id = r.u32();
    if (id >= table_count)
      throw ParseError(r.chunk() + ": " + name + " names table " + std::to_string(id) +
                       " of " + std::to_string(table_count));
    if (seen[id])
      throw ParseError(r.chunk() + ": " + name + " names table " + std::to_string(id) +
                       " twice");
    seen[id] = true;
    block.ids.push_back(id);
  }
  return block;
}

Encoded seal(uint8_t mode, const Shape& main_shape, const Shape& side_shape,
             const ScaleSpec& scales, const AdaptationRecord& f_rec,
             const AdaptationRecord& h_rec, const Bitstream& side_payload,
             const Bitstream& main_payload, ModelStats f_stats, ModelStats h_stats) {
  const uint32_t b = f_rec.config.param_bits;
  if (b < 1 || b > 16) throw ConfigError("parameter bit depth must lie in [1, 16]");
  if (mode == 1 && h_rec.config.param_bits != b)
    throw ConfigError("both streams must share one parameter bit depth");
  check_record_layout(f_rec);
  check_record_layout(h_rec);

  ByteWriter w;
  w.tag("EGAP");
  w.u16(kContainerVersion);
  w.u8(mode);
  w.u8(static_cast<uint8_t>(b));
  w.u32(main_shape.h);
  w.u32(main_shape.w);
  w.u32(main_shape.c);
  w.u32(side_shape.h);
  w.u32(side_shape.w);
  w.u32(side_shape.c);
  w.u16(mode == 1 ? scales.count : 0);
  w.f64(mode == 1 ? scales.sigma_min : 0.0);
  w.f64(mode == 1 ? scales.sigma_max : 0.0);
  write_method_block(w, f_rec);
  write_method_block(w, h_rec);
  w.u64(side_payload.bytes.size());
  w.u64(main_payload.bytes.size());
  const uint64_t header_bytes = w.size();

  BitWriter bw;
  for (const auto& ta : f_rec.targeted) bw.bit(ta.selected);
  for (const auto& ta : h_rec.targeted) bw.bit(ta.selected);
  const uint64_t signal_bits = bw.bit_count();
  auto put_indices = [&bw](const AdaptationRecord& rec) {
    for (const auto& ta : rec.targeted) {
      if (!ta.selected) continue;
      for (uint32_t idx : ta.indices) {
        if (idx >= (1u << rec.config.param_bits))
          throw ConfigError("parameter index exceeds the grid");
        bw.bits(idx, rec.config.param_bits);
      }
    }
  };
  put_indices(f_rec);
  put_indices(h_rec);
  const uint64_t packed_bits = bw.bit_count();
  const auto section = bw.take();
  w.bytes(section);
  w.bytes(side_payload.bytes);
  w.bytes(main_payload.bytes);

  Encoded out;
  out.bytes = w.take();
  out.stats.sizes.header_bits = header_bytes * 8;
  out.stats.sizes.signal_bits = signal_bits;
  out.stats.sizes.param_bits = packed_bits - signal_bits;
  out.stats.sizes.padding_bits = uint64_t(section.size()) * 8 - packed_bits;
  out.stats.sizes.side_payload_bits = side_payload.bit_count();
  out.stats.sizes.main_payload_bits = main_payload.bit_count();
  out.stats.factorized_record = f_rec;
  out.stats.hyper_record = h_rec;
  out.stats.factorized_stats = std::move(f_stats);
  out.stats.hyper_stats = std::move(h_stats);
  return out;
}

void check_shape(const Shape& shape, const char* what) {
  const uint64_t n = shape.volume();
  if (n == 0) throw ConfigError(std::string(what) + " tensor is empty");
  if (n > kMaxVolume) throw ConfigError(std::string(what) + " tensor exceeds the size cap");
}

} // namespace

FreqTable rebuild_center_bin_freqs(const FreqTable& learned, double beta) {
  if (!learned.contains(0)) throw ConfigError("center-bin rebuild: support misses zero");
  const int64_t total = learned.total();
  const int64_t f0 = learned.freq(0);
  const int64_t shift = std::llround(beta * static_cast<double>(total));
  const int64_t f0_new = f0 - shift;
  const auto size = static_cast<int64_t>(learned.size());
  if (size == 1) {
    if (shift != 0) throw CodingError("center-bin rebuild: single-bin table cannot shift mass");
    return learned;
  }
  if (f0_new < 1) throw CodingError("center-bin rebuild: center frequency underflows");
  const int64_t rest_old = total - f0;
  const int64_t rest_new = total - f0_new;
  if (rest_old <= 0) throw CodingError("center-bin rebuild: no off-center mass");
  if (rest_new < size - 1)
    throw CodingError("center-bin rebuild: off-center frequencies underflow");

  // Scale every off-center frequency by rest_new / rest_old with exact
  // integer quotients, then settle the residual by largest remainder.
  const auto center = static_cast<size_t>(-int64_t(learned.support_min()));
  std::vector<int64_t> off(learned.size() - 1);
  std::vector<double> rem(learned.size() - 1);
  size_t j = 0;
  for (size_t i = 0; i < learned.size(); ++i) {
    if (i == center) continue;
    const uint64_t v = uint64_t(learned.freqs()[i]) * uint64_t(rest_new);
    off[j] = std::max<int64_t>(1, static_cast<int64_t>(v / uint64_t(rest_old)));
    rem[j] = static_cast<double>(v % uint64_t(rest_old));
    ++j;
  }
  redistribute_to_total(off, rest_new, rem);
  std::vector<uint32_t> freqs(learned.size());
  j = 0;
  for (size_t i = 0; i < learned.size(); ++i)
    freqs[i] = (i == center) ? static_cast<uint32_t>(f0_new)
                             : static_cast<uint32_t>(off[j++]);
  return FreqTable(learned.support_min(), std::move(freqs), learned.precision());
}

std::vector<FreqTable> coding_tables(std::span<const PmfTable> learned,
                                     const AdaptationRecord& record) {
  check_record_layout(record);
  const auto adapted = apply_adaptations(learned, record);
  std::vector<FreqTable> out;
  out.reserve(learned.size());
  for (const auto& table : learned) out.push_back(quantize_pmf(table));
  for (const auto& ta : record.targeted) {
    if (!ta.selected) continue;
    if (record.config.method == AdaptMethod::CenterBin) {
      const auto& base = learned[ta.table];
      ParamGrids grids(record.config.param_bits, base.support_min(), base.support_max());
      out[ta.table] =
          rebuild_center_bin_freqs(out[ta.table], grids.dequantize_delta(ta.indices.at(0)));
    } else {
      out[ta.table] = quantize_pmf(adapted[ta.table]);
    }
  }
  return out;
}

Encoded encode_factorized_container(const LatentTensor& main, std::span<const PmfTable> tables,
                                    const MethodConfig& method) {
  check_shape(main.shape, "main");
  if (main.role != Role::Main) throw ConfigError("single-stream container expects a main tensor");
  const SymbolStream stream = factorized_stream(main, tables.size());
  const HistogramSet hist = histogram(stream, tables);
  const AdaptationRecord record = select_tables(hist, tables, method);
  const auto freq = coding_tables(tables, record);
  const Bitstream payload = encode(stream, freq);
  ModelStats stats = model_stats("factorized", hist, tables, record);
  return seal(0, main.shape, Shape{}, ScaleSpec{0, 0.0, 0.0}, record, AdaptationRecord{},
              Bitstream{}, payload, std::move(stats), ModelStats{});
}

Encoded encode_hyper_container(const LatentTensor& main, const SideInfo& side_info,
                               const LatentTensor& side, std::span<const PmfTable> side_tables,
                               const ScaleSpec& scales, const MethodConfig& side_method,
                               const MethodConfig& main_method) {
  check_shape(main.shape, "main");
  check_shape(side.shape, "side");
  if (main.role != Role::Main || side.role != Role::Side)
    throw ConfigError("two-stream container expects a main and a side tensor");
  const ScaleTable scale_table = scales.build();

  const SymbolStream side_stream = factorized_stream(side, side_tables.size());
  const HistogramSet side_hist = histogram(side_stream, side_tables);
  const AdaptationRecord side_record = select_tables(side_hist, side_tables, side_method);
  const auto side_freq = coding_tables(side_tables, side_record);
  const Bitstream side_payload = encode(side_stream, side_freq);

  const SymbolStream main_stream = hyperprior_stream(main, side_info, scale_table);
  const HistogramSet main_hist = histogram(main_stream, scale_table.tables());
  const AdaptationRecord main_record = select_tables(main_hist, scale_table.tables(), main_method);
  const auto main_freq = coding_tables(scale_table.tables(), main_record);
  const Bitstream main_payload = encode(main_stream, main_freq);

  ModelStats side_stats = model_stats("side", side_hist, side_tables, side_record);
  ModelStats main_stats = model_stats("main", main_hist, scale_table.tables(), main_record);
  return seal(1, main.shape, side.shape, scales, side_record, main_record, side_payload,
              main_payload, std::move(side_stats), std::move(main_stats));
}

Decoded decode_container(std::span<const uint8_t> bytes,
                         std::span<const PmfTable> factorized_tables,
                         const SideInfo* main_side_info) {
  ByteReader r(bytes, "container");
  if (!r.tag_matches("EGAP")) throw ParseError("container: bad magic at offset 0");
  const uint16_t version = r.u16();
  if (version != kContainerVersion)
    throw ParseError("container: unsupported version " + std::to_string(version));
  const uint8_t mode = r.u8();
  if (mode > 1) throw ParseError("container: unknown mode " + std::to_string(mode));
  const uint8_t b = r.u8();
  if (b < 1 || b > 16)
    throw ParseError("container: parameter bit depth " + std::to_string(b) +
                     " outside [1, 16]");
  const Shape main_shape{r.u32(), r.u32(), r.u32()};
  const Shape side_shape{r.u32(), r.u32(), r.u32()};
  const uint16_t scale_count = r.u16();
  const double sigma_min = r.f64();
  const double sigma_max = r.f64();

  if (main_shape.volume() == 0 || main_shape.volume() > kMaxVolume)
    throw ParseError("container: bad main shape");
  if (mode == 0) {
    if (side_shape != Shape{} || scale_count != 0 || sigma_min != 0.0 || sigma_max != 0.0)
      throw ParseError("container: single-stream mode carries conditional fields");
  } else {
    if (side_shape.volume() == 0 || side_shape.volume() > kMaxVolume)
      throw ParseError("container: bad side shape");
    if (scale_count < 2) throw ParseError("container: fewer than two conditional scales");
    if (!(sigma_min > 0.0) || !(sigma_max > sigma_min) || !std::isfinite(sigma_max))
      throw ParseError("container: bad conditional scale bounds");
  }

  const uint32_t fact_channels = mode == 0 ? main_shape.c : side_shape.c;
  if (factorized_tables.size() != fact_channels)
    throw ConfigError("decode: " + std::to_string(factorized_tables.size()) +
                      " channel tables for " + std::to_string(fact_channels) + " channels");

  BlockInfo fb = read_method_block(r, factorized_tables.size(), b, "factorized block");
  BlockInfo hb = read_method_block(r, mode == 1 ? scale_count : 0, b, "conditional block");
  if (mode == 0 && hb.config.method != AdaptMethod::None)
    throw ParseError("container: conditional block present in single-stream mode");

  const uint64_t side_len = r.u64();
  const uint64_t main_len = r.u64();
  const uint64_t header_bytes = r.offset();
  if (mode == 0 && side_len != 0)
    throw ParseError("container: side payload in single-stream mode");
  if (side_len > r.remaining() || main_len > r.remaining() - side_len)
    throw ParseError("container: payload lengths exceed the file");
  const size_t section_bytes = r.remaining() - side_len - main_len;
  const auto section = r.bytes(section_bytes);
  const auto side_bytes = r.bytes(side_len);
  const auto main_bytes = r.bytes(main_len);
  r.expect_end();

  BitReader br(section, "container selection section");
  auto read_record = [&br, b](const BlockInfo& block) {
    AdaptationRecord rec;
    rec.config = block.config;
    rec.targeted.reserve(block.ids.size());
    for (uint32_t id : block.ids) {
      TableAdaptation ta;
      ta.table = id;
      ta.selected = br.bit();
      rec.targeted.push_back(std::move(ta));
    }
    return rec;
  };
  AdaptationRecord f_rec = read_record(fb);
  AdaptationRecord h_rec = read_record(hb);
  const uint64_t signal_bits = br.bit_offset();
  auto read_indices = [&br, b](AdaptationRecord& rec) {
    const uint32_t want = expected_index_count(rec.config);
    for (auto& ta : rec.targeted) {
      if (!ta.selected) continue;
      ta.indices.reserve(want);
      for (uint32_t i = 0; i < want; ++i)
        ta.indices.push_back(static_cast<uint32_t>(br.bits(b)));
      ta.param_bits = double(want) * b;
    }
  };
  read_indices(f_rec);
  read_indices(h_rec);
  const uint64_t packed_bits = br.bit_offset();
  if (section_bytes != (packed_bits + 7) / 8)
    throw ParseError("container selection section: length mismatch");
  const uint64_t pad = uint64_t(section_bytes) * 8 - packed_bits;
  if (pad > 0 && br.bits(static_cast<unsigned>(pad)) != 0)
    throw ParseError("container selection section: nonzero padding");

  const auto f_freq = coding_tables(factorized_tables, f_rec);

  Decoded out;
  out.factorized_method = fb.config;
  out.hyper_method = hb.config;
  out.sizes.header_bits = header_bytes * 8;
  out.sizes.signal_bits = signal_bits;
  out.sizes.param_bits = packed_bits - signal_bits;
  out.sizes.padding_bits = pad;
  out.sizes.side_payload_bits = side_len * 8;
  out.sizes.main_payload_bits = main_len * 8;

  if (mode == 0) {
    std::vector<uint32_t> table_of(main_shape.volume());
    for (size_t i = 0; i < table_of.size(); ++i)
      table_of[i] = static_cast<uint32_t>(i % main_shape.c);
    out.main = LatentTensor{main_shape, Role::Main, decode(main_bytes, f_freq, table_of)};
    return out;
  }

  if (main_side_info == nullptr)
    throw ConfigError("decode: a two-stream container needs its side info");
  if (main_side_info->scales.size() != main_shape.volume())
    throw ConfigError("decode: side info covers " +
                      std::to_string(main_side_info->scales.size()) + " of " +
                      std::to_string(main_shape.volume()) + " symbols");
  out.scales = ScaleSpec{scale_count, sigma_min, sigma_max};
  const ScaleTable scale_table = out.scales.build();
  const auto h_freq = coding_tables(scale_table.tables(), h_rec);

  std::vector<uint32_t> side_table_of(side_shape.volume());
  for (size_t i = 0; i < side_table_of.size(); ++i)
    side_table_of[i] = static_cast<uint32_t>(i % side_shape.c);
  out.side = LatentTensor{side_shape, Role::Side, decode(side_bytes, f_freq, side_table_of)};
  const auto assignment = scale_table.assign_scales(main_side_info->scales);
  out.main = LatentTensor{main_shape, Role::Main, decode(main_bytes, h_freq, assignment)};
  return out;
}

} // namespace egap
