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

#ifndef EGAP_ADAPT_HPP
#define EGAP_ADAPT_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "egap/gap.hpp"
#include "egap/pmf.hpp"

namespace egap {

enum class AdaptMethod : uint8_t { None = 0, Gmm = 1, ZeroMean = 2, CenterBin = 3 };

const char* to_string(AdaptMethod method);

inline constexpr double kSigmaGridMin = 0.002;
inline constexpr double kSigmaGridMax = 20.0;
inline constexpr double kDeltaGridLimit = 0.03;

/// Shared parameter codebooks: 2^bits centers per parameter, identical on
/// both coder sides. sigma is log-spaced over [kSigmaGridMin,
/// kSigmaGridMax]; weight is uniform over [0, 1]; mean is uniform over the
/// table support; the center-bin delta is uniform over
/// [-kDeltaGridLimit, kDeltaGridLimit]. Quantization picks the nearest
/// center, breaking exact ties toward the lower index.
class ParamGrids {
public:
  ParamGrids(uint32_t bits, int32_t support_min, int32_t support_max);

  uint32_t bits() const { return bits_; }
  uint32_t levels() const { return 1u << bits_; }

  uint32_t quantize_sigma(double v) const;
  double dequantize_sigma(uint32_t index) const;
  uint32_t quantize_weight(double v) const;
  double dequantize_weight(uint32_t index) const;
  uint32_t quantize_mean(double v) const;
  double dequantize_mean(uint32_t index) const;
  uint32_t quantize_delta(double v) const;
  double dequantize_delta(uint32_t index) const;

private:
  uint32_t bits_;
  double mean_lo_, mean_hi_;
};

struct GmmComponent {
  double weight = 1.0;
  double mean = 0.0;
  double sigma = 1.0;
};

struct GmmParams {
  std::vector<GmmComponent> comps;
  void normalize_weights();
};

/// Gaussian-mixture density evaluated at the integer support points and
/// renormalized over them. Component weights need not sum to one; the
/// truncation normalizer absorbs any scale.
PmfTable truncated_gmm_pmf(const GmmParams& params, int32_t support_min, int32_t support_max,
                           TableLabel label = {});

struct FitResult {
  GmmParams params;
  double objective = 0.0;    // sum_x count_x * log2 pmf(x); higher is better
  std::vector<double> trace; // trace[0] = objective at init, then accepted steps
};

/// Histogram-weighted EM with deterministic multi-start. Accepted
/// iterations never decrease the objective (step-halving guard); stops at
/// a per-symbol improvement below 1e-7 or 200 iterations.
FitResult fit_gmm(std::span<const int64_t> counts, int32_t support_min, int32_t support_max,
                  uint32_t k);

/// Single zero-mean Gaussian: golden-section search over log sigma within
/// the sigma grid range, guarded by a moment-matched candidate.
FitResult fit_zero_mean_sigma(std::span<const int64_t> counts, int32_t support_min,
                              int32_t support_max);

/// Learned center mass minus empirical center mass, clamped to the delta
/// grid and to the feasible window of the integer center-bin rebuild.
double compute_center_beta(const PmfTable& learned, std::span<const int64_t> counts);

/// Moves beta out of the center bin and rescales the rest:
/// p(0) = N(0) - beta, p(x) = N(x) * (1 + beta / (1 - N(0))) for x != 0.
/// beta = 0 returns the table unchanged.
PmfTable center_bin_pmf(const PmfTable& learned, double beta);

struct MethodConfig {
  AdaptMethod method = AdaptMethod::None;
  uint32_t k = 1;          // mixture components, Gmm only
  uint32_t top_tables = 0; // T; 0 targets every table
  uint32_t param_bits = 8; // b
};

/// Transmitted parameter bits for one selected table.
uint32_t param_cost_bits(const MethodConfig& config);

struct TableAdaptation {
  uint32_t table = 0;
  bool selected = false;
  std::vector<uint32_t> indices; // grid indices, fixed layout per method
  double learned_bits = 0.0;
  double adapted_bits = 0.0; // with dequantized parameters
  double param_bits = 0.0;
};

struct AdaptationRecord {
  MethodConfig config;
  std::vector<TableAdaptation> targeted; // ranked by learned_bits, descending
  double signal_bits() const { return static_cast<double>(targeted.size()); }
  double selected_param_bits() const;
  /// Sum over selected tables of learned - adapted - params; signaling
  /// bits are not subtracted here.
  double gain_bits() const;
};

/// Ranks tables by baseline cost, fits the configured family on the top
/// T, quantizes the parameters, refines each index once by +-1, and keeps
/// a replacement only when its net saving is positive.
AdaptationRecord select_tables(const HistogramSet& hist, std::span<const PmfTable> tables,
                               const MethodConfig& config);

/// Rebuilds mixture params from transmitted indices (layout: weight,
/// mean, sigma per component).
GmmParams gmm_from_indices(std::span<const uint32_t> indices, uint32_t k,
                           const ParamGrids& grids);

/// The table list after applying the selected replacements, built from
/// dequantized indices only, so encoder and decoder agree exactly.
std::vector<PmfTable> apply_adaptations(std::span<const PmfTable> tables,
                                        const AdaptationRecord& record);

/// One entropy model's ideal-bits ledger under a selection record.
ModelStats model_stats(std::string name, const HistogramSet& hist,
                       std::span<const PmfTable> tables, const AdaptationRecord& record);

} // namespace egap

#endif
