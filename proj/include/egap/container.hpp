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

#ifndef EGAP_CONTAINER_HPP
#define EGAP_CONTAINER_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "egap/adapt.hpp"
#include "egap/gap.hpp"
#include "egap/latent.hpp"
#include "egap/range_coder.hpp"

namespace egap {

/// Predefined conditional scales carried in the container header so the
/// decoder rebuilds the identical table set.
struct ScaleSpec {
  uint16_t count = 64;
  double sigma_min = 0.11;
  double sigma_max = 256.0;
  ScaleTable build() const { return ScaleTable::log_spaced(count, sigma_min, sigma_max); }
};

/// Exact bit ledger of one container; the sections sum to the byte size.
struct SectionSizes {
  uint64_t header_bits = 0;       // fixed fields, method blocks, payload lengths
  uint64_t signal_bits = 0;       // one selection bit per targeted table
  uint64_t param_bits = 0;        // packed parameter indices
  uint64_t padding_bits = 0;      // zero fill up to the byte boundary
  uint64_t side_payload_bits = 0;
  uint64_t main_payload_bits = 0;
  uint64_t total_bits() const {
    return header_bits + signal_bits + param_bits + padding_bits + side_payload_bits +
           main_payload_bits;
  }
};

struct EncodeStats {
  SectionSizes sizes;
  AdaptationRecord factorized_record;
  AdaptationRecord hyper_record;
  ModelStats factorized_stats; // ideal-bits ledger of the factorized-coded tensor
  ModelStats hyper_stats;      // ideal-bits ledger of the conditional main tensor
};

struct Encoded {
  std::vector<uint8_t> bytes;
  EncodeStats stats;
};

/// Integer-only center-bin rebuild: shifts round(beta * total) slots out
/// of the center frequency and rescales the others by integer multiply,
/// divide and largest-remainder redistribution. Both coder sides derive
/// the adapted frequencies through this path, so no float comparison is
/// ever needed for agreement.
FreqTable rebuild_center_bin_freqs(const FreqTable& learned, double beta);

/// The frequency tables the payload is actually coded with: quantized
/// learned tables with the record's replacements applied.
std::vector<FreqTable> coding_tables(std::span<const PmfTable> learned,
                                     const AdaptationRecord& record);

/// Factorized-only container: one tensor coded by its channel tables.
Encoded encode_factorized_container(const LatentTensor& main, std::span<const PmfTable> tables,
                                    const MethodConfig& method);

/// Two-stream container: the side tensor coded by its channel tables, the
/// main tensor coded by the conditional scale tables chosen from
/// side_info.
Encoded encode_hyper_container(const LatentTensor& main, const SideInfo& side_info,
                               const LatentTensor& side, std::span<const PmfTable> side_tables,
                               const ScaleSpec& scales, const MethodConfig& side_method,
                               const MethodConfig& main_method);

struct Decoded {
  LatentTensor main;
  std::optional<LatentTensor> side;
  SectionSizes sizes;
  MethodConfig factorized_method;
  MethodConfig hyper_method;
  ScaleSpec scales; // meaningful when side is present
};

/// factorized_tables must be the learned channel tables of the
/// factorized-coded tensor (the main tensor for single-stream containers,
/// the side tensor otherwise). main_side_info carries the out-of-band
/// per-symbol scales for the conditional main stream and is required for
/// two-stream containers.
Decoded decode_container(std::span<const uint8_t> bytes,
                         std::span<const PmfTable> factorized_tables,
                         const SideInfo* main_side_info);

} // namespace egap

#endif
