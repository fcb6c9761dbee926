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

#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "egap/container.hpp"
#include "egap/synth.hpp"

using namespace egap;

namespace {

FactorizedSynth make_factorized(uint64_t seed, Shape shape, double mismatch) {
  SynthSpec spec;
  spec.seed = seed;
  spec.shape = shape;
  for (uint32_t ch = 0; ch < shape.c; ++ch)
    spec.true_dist.push_back({DistFamily::Gaussian, 0.0, 0.8 + 0.5 * ch, 0.0, 0.0, 1.0});
  spec.mismatch_scale = mismatch;
  return synthesize_factorized(spec);
}

struct HyperCase {
  HyperSynth hyper;
  FactorizedSynth side;
  ScaleSpec scales{16, 0.2, 16.0};
};

HyperCase make_hyper(uint64_t seed) {
  HyperCase hc;
  SynthSpec main_spec;
  main_spec.seed = seed;
  main_spec.shape = {8, 8, 3};
  main_spec.true_dist = {{DistFamily::Gaussian, 0.0, 0.7, 0.0, 0.0, 1.0},
                         {DistFamily::Gaussian, 0.0, 1.9, 0.0, 0.0, 1.0},
                         {DistFamily::Gaussian, 0.0, 3.5, 0.0, 0.0, 1.0}};
  main_spec.mismatch_scale = 1.3;
  hc.hyper = synthesize_hyperprior_main(main_spec, hc.scales.build());

  SynthSpec side_spec;
  side_spec.seed = seed + 1;
  side_spec.shape = {2, 2, 3};
  side_spec.true_dist = {{DistFamily::Gaussian, 0.0, 1.1, 0.0, 0.0, 1.0}};
  side_spec.mismatch_scale = 1.2;
  hc.side = synthesize_factorized(side_spec, Role::Side);
  return hc;
}

// the decoder's view of a record: only what the header transmits
AdaptationRecord transmitted_view(const AdaptationRecord& rec) {
  AdaptationRecord out;
  out.config = rec.config;
  for (const auto& ta : rec.targeted) {
    TableAdaptation copy;
    copy.table = ta.table;
    copy.selected = ta.selected;
    copy.indices = ta.indices;
    out.targeted.push_back(std::move(copy));
  }
  return out;
}

} // namespace

TEST_CASE("factorized container round trips and re-encodes byte-identically") {
  FactorizedSynth synth = make_factorized(7, {6, 6, 2}, 1.5);
  MethodConfig method{AdaptMethod::Gmm, 1, 0, 8};
  Encoded enc = encode_factorized_container(synth.tensor, synth.tables, method);
  CHECK(enc.stats.sizes.total_bits() == enc.bytes.size() * 8);
  CHECK(enc.stats.sizes.side_payload_bits == 0);

  Decoded dec = decode_container(enc.bytes, synth.tables, nullptr);
  CHECK(dec.main.shape == synth.tensor.shape);
  CHECK(dec.main.symbols == synth.tensor.symbols);
  CHECK(!dec.side.has_value());
  CHECK(dec.factorized_method.method == AdaptMethod::Gmm);
  CHECK(dec.factorized_method.k == 1);
  CHECK(dec.sizes.total_bits() == enc.stats.sizes.total_bits());

  Encoded again = encode_factorized_container(dec.main, synth.tables, dec.factorized_method);
  CHECK(again.bytes == enc.bytes);
}

TEST_CASE("containers are deterministic") {
  FactorizedSynth synth = make_factorized(9, {5, 5, 2}, 1.2);
  MethodConfig method{AdaptMethod::ZeroMean, 1, 0, 8};
  Encoded a = encode_factorized_container(synth.tensor, synth.tables, method);
  Encoded b = encode_factorized_container(synth.tensor, synth.tables, method);
  CHECK(a.bytes == b.bytes);
}

TEST_CASE("two-stream container round trips and re-encodes byte-identically") {
  HyperCase hc = make_hyper(11);
  MethodConfig side_method{AdaptMethod::Gmm, 1, 0, 8};
  MethodConfig main_method{AdaptMethod::ZeroMean, 1, 0, 8};
  Encoded enc = encode_hyper_container(hc.hyper.main, hc.hyper.side_info, hc.side.tensor,
                                       hc.side.tables, hc.scales, side_method, main_method);
  CHECK(enc.stats.sizes.total_bits() == enc.bytes.size() * 8);
  CHECK(enc.stats.sizes.side_payload_bits > 0);
  CHECK(enc.stats.sizes.main_payload_bits > 0);

  Decoded dec = decode_container(enc.bytes, hc.side.tables, &hc.hyper.side_info);
  CHECK(dec.main.symbols == hc.hyper.main.symbols);
  REQUIRE(dec.side.has_value());
  CHECK(dec.side->symbols == hc.side.tensor.symbols);
  CHECK(dec.side->role == Role::Side);
  CHECK(dec.scales.count == hc.scales.count);
  CHECK(dec.scales.sigma_min == hc.scales.sigma_min);

  Encoded again =
      encode_hyper_container(dec.main, hc.hyper.side_info, *dec.side, hc.side.tables,
                             dec.scales, dec.factorized_method, dec.hyper_method);
  CHECK(again.bytes == enc.bytes);
}

TEST_CASE("center-bin frequency rebuild fixture") {
  FreqTable learned(-1, {16384, 32768, 16384}, 16);
  // beta * 2^16 lands exactly on -6554
  double beta = -6554.0 / 65536.0;
  FreqTable out = rebuild_center_bin_freqs(learned, beta);
  CHECK(out.freqs() == std::vector<uint32_t>{13107, 39322, 13107});
  CHECK(out.support_min() == -1);

  FreqTable same = rebuild_center_bin_freqs(learned, 0.0);
  CHECK(same.freqs() == learned.freqs());
}

TEST_CASE("center-bin rebuild conserves the total and the center identity") {
  FreqTable learned(-2, {6000, 14000, 30000, 9536, 6000}, 16);
  for (double beta : {-0.03, -0.011, -0.0004, 0.0007, 0.0291}) {
    FreqTable out = rebuild_center_bin_freqs(learned, beta);
    uint64_t sum = 0;
    for (uint32_t f : out.freqs()) {
      CHECK(f >= 1);
      sum += f;
    }
    CHECK(sum == out.total());
    int64_t shift = std::llround(beta * 65536.0);
    CHECK(static_cast<int64_t>(out.freq(0)) == 30000 - shift);
  }
}

TEST_CASE("center-bin rebuild rejects infeasible shifts") {
  FreqTable thin_center(-1, {32767, 1, 32768}, 16);
  CHECK_THROWS_AS(rebuild_center_bin_freqs(thin_center, 0.0005), CodingError);

  FreqTable thin_rest(-1, {1, 65534, 1}, 16);
  CHECK_THROWS_AS(rebuild_center_bin_freqs(thin_rest, -0.0001), CodingError);

  FreqTable single(0, {65536}, 16);
  CHECK_THROWS_AS(rebuild_center_bin_freqs(single, 0.001), CodingError);
  CHECK(rebuild_center_bin_freqs(single, 0.0).freqs() == single.freqs());

  FreqTable shifted(1, {65536}, 16);
  CHECK_THROWS_AS(rebuild_center_bin_freqs(shifted, 0.0), ConfigError);
}

TEST_CASE("encoder and decoder derive identical coding tables") {
  FactorizedSynth synth = make_factorized(13, {8, 8, 2}, 1.6);
  SymbolStream stream = factorized_stream(synth.tensor, synth.tables.size());
  HistogramSet hist = histogram(stream, synth.tables);

  for (AdaptMethod m : {AdaptMethod::Gmm, AdaptMethod::ZeroMean, AdaptMethod::CenterBin}) {
    MethodConfig config{m, 2, 0, 8};
    AdaptationRecord rec = select_tables(hist, synth.tables, config);
    auto enc_tables = coding_tables(synth.tables, rec);
    auto dec_tables = coding_tables(synth.tables, transmitted_view(rec));
    REQUIRE(enc_tables.size() == dec_tables.size());
    for (size_t t = 0; t < enc_tables.size(); ++t) {
      CHECK(enc_tables[t].freqs() == dec_tables[t].freqs());
      CHECK(enc_tables[t].support_min() == dec_tables[t].support_min());
    }
  }
}

TEST_CASE("section sizes stay byte-aligned where the format requires") {
  FactorizedSynth synth = make_factorized(15, {6, 6, 3}, 1.4);
  Encoded enc =
      encode_factorized_container(synth.tensor, synth.tables, {AdaptMethod::ZeroMean, 1, 0, 8});
  const SectionSizes& s = enc.stats.sizes;
  CHECK(s.header_bits % 8 == 0);
  CHECK((s.signal_bits + s.param_bits + s.padding_bits) % 8 == 0);
  CHECK(s.padding_bits < 8);
  CHECK(s.main_payload_bits % 8 == 0);
  CHECK(s.signal_bits == 3); // every channel targeted
}

TEST_CASE("container rejects tampered headers deterministically") {
  FactorizedSynth synth = make_factorized(17, {6, 6, 4}, 1.5);
  Encoded enc =
      encode_factorized_container(synth.tensor, synth.tables, {AdaptMethod::ZeroMean, 1, 0, 8});
  auto bytes = enc.bytes;

  auto bad_magic = bytes;
  bad_magic[0] ^= 1;
  CHECK_THROWS_WITH_AS(decode_container(bad_magic, synth.tables, nullptr),
                       doctest::Contains("magic"), ParseError);

  // the version gate fires before anything else is even read
  std::vector<uint8_t> future{'E', 'G', 'A', 'P', 2, 0};
  CHECK_THROWS_WITH_AS(decode_container(future, synth.tables, nullptr),
                       doctest::Contains("version"), ParseError);

  auto bad_mode = bytes;
  bad_mode[6] = 9;
  CHECK_THROWS_WITH_AS(decode_container(bad_mode, synth.tables, nullptr),
                       doctest::Contains("mode"), ParseError);

  // single-stream containers must keep the conditional fields zeroed
  auto stray_scales = bytes;
  stray_scales[32] = 1;
  CHECK_THROWS_WITH_AS(decode_container(stray_scales, synth.tables, nullptr),
                       doctest::Contains("conditional"), ParseError);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS_AS(decode_container(truncated, synth.tables, nullptr), ParseError);

  std::vector<PmfTable> fewer(synth.tables.begin(), synth.tables.end() - 1);
  CHECK_THROWS_AS(decode_container(bytes, fewer, nullptr), ConfigError);
}

TEST_CASE("a flipped selection bit cannot pass unnoticed") {
  FactorizedSynth synth = make_factorized(19, {8, 8, 4}, 1.6);
  Encoded enc =
      encode_factorized_container(synth.tensor, synth.tables, {AdaptMethod::ZeroMean, 1, 0, 8});
  size_t bit_section = enc.stats.sizes.header_bits / 8;
  auto bytes = enc.bytes;
  bytes[bit_section] ^= 0x80; // first targeted table's selection flag
  CHECK_THROWS_AS(decode_container(bytes, synth.tables, nullptr), ParseError);
}

TEST_CASE("payload corruption fails loudly or changes the data, never silently") {
  FactorizedSynth synth = make_factorized(21, {8, 8, 2}, 1.3);
  Encoded enc =
      encode_factorized_container(synth.tensor, synth.tables, {AdaptMethod::ZeroMean, 1, 0, 8});
  auto bytes = enc.bytes;
  size_t mid = bytes.size() - (enc.stats.sizes.main_payload_bits / 8) / 2;
  bytes[mid] ^= 0x55;
  try {
    Decoded dec = decode_container(bytes, synth.tables, nullptr);
    CHECK(dec.main.symbols != synth.tensor.symbols);
  } catch (const Error&) {
    CHECK(true);
  }
}

TEST_CASE("two-stream decode demands matching side info") {
  HyperCase hc = make_hyper(23);
  Encoded enc = encode_hyper_container(hc.hyper.main, hc.hyper.side_info, hc.side.tensor,
                                       hc.side.tables, hc.scales, {AdaptMethod::None, 1, 0, 8},
                                       {AdaptMethod::None, 1, 0, 8});
  CHECK_THROWS_AS(decode_container(enc.bytes, hc.side.tables, nullptr), ConfigError);

  SideInfo short_info = hc.hyper.side_info;
  short_info.scales.pop_back();
  CHECK_THROWS_AS(decode_container(enc.bytes, hc.side.tables, &short_info), ConfigError);
}

TEST_CASE("encoders validate roles and table counts") {
  FactorizedSynth synth = make_factorized(25, {4, 4, 2}, 1.0);
  LatentTensor side_role = synth.tensor;
  side_role.role = Role::Side;
  CHECK_THROWS_AS(
      encode_factorized_container(side_role, synth.tables, {AdaptMethod::None, 1, 0, 8}),
      ConfigError);

  std::vector<PmfTable> fewer(synth.tables.begin(), synth.tables.end() - 1);
  CHECK_THROWS_AS(
      encode_factorized_container(synth.tensor, fewer, {AdaptMethod::None, 1, 0, 8}),
      ConfigError);

  HyperCase hc = make_hyper(27);
  CHECK_THROWS_AS(encode_hyper_container(hc.side.tensor, hc.hyper.side_info, hc.side.tensor,
                                         hc.side.tables, hc.scales, {AdaptMethod::None, 1, 0, 8},
                                         {AdaptMethod::None, 1, 0, 8}),
                  ConfigError);

  // both streams must agree on the parameter bit depth
  CHECK_THROWS_AS(encode_hyper_container(hc.hyper.main, hc.hyper.side_info, hc.side.tensor,
                                         hc.side.tables, hc.scales,
                                         {AdaptMethod::ZeroMean, 1, 0, 8},
                                         {AdaptMethod::ZeroMean, 1, 0, 12}),
                  ConfigError);
}
