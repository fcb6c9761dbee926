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

#ifndef EGAP_PMF_HPP
#define EGAP_PMF_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "egap/error.hpp"
#include "egap/latent.hpp"

namespace egap {

/// erfc with fixed rational-function coefficients (Cody's classic
/// decomposition), so results match bit-for-bit across platforms.
/// Absolute error is below 1e-15; we only rely on 1e-7.
double erfc_rational(double x);

/// Standard normal cdf built on erfc_rational.
double normal_cdf(double x);

/// Mass of the unit bin [x - 1/2, x + 1/2] under N(0, sigma^2).
double gaussian_bin_mass(double x, double sigma);

inline constexpr double kPmfFloor = 0x1.0p-16;
inline constexpr double kDefaultTailMass = 0x1.0p-20;
inline constexpr int32_t kDefaultSupportLimit = 255;

enum class ModelKind : uint8_t { Factorized = 0, Hyperprior = 1 };

struct TableLabel {
  ModelKind model = ModelKind::Factorized;
  uint32_t index = 0;
};

std::string to_string(const TableLabel& label);

/// Floors each entry at kPmfFloor, then rescales the mass above the floor
/// so the entries sum to exactly one. Throws ConfigError when the mass is
/// not positive and finite or when size() * kPmfFloor >= 1.
void floor_and_normalize(std::vector<double>& mass);

/// Discrete pmf over the integer interval [support_min, support_max].
/// Invariants: the support contains zero, every bin is at least kPmfFloor,
/// and the bins sum to one (floor_and_normalize runs in the constructor).
class PmfTable {
public:
  PmfTable(int32_t support_min, int32_t support_max, std::vector<double> mass,
           TableLabel label = {});

  int32_t support_min() const { return support_min_; }
  int32_t support_max() const { return support_max_; }
  size_t size() const { return probs_.size(); }
  bool contains(int32_t symbol) const {
    return symbol >= support_min_ && symbol <= support_max_;
  }
  /// Probability of a symbol; throws CodingError outside the support.
  double prob(int32_t symbol) const;
  const std::vector<double>& probs() const { return probs_; }
  TableLabel label() const { return label_; }

private:
  int32_t support_min_;
  int32_t support_max_;
  std::vector<double> probs_;
  TableLabel label_;
};

using CdfFn = std::function<double(double)>;

/// Tabulates a pmf by differencing the cdf at half-integer bin edges.
/// Negative differences clamp to zero; zero total mass on the support is
/// a ConfigError.
PmfTable pmf_from_cdf(const CdfFn& cdf, int32_t support_min, int32_t support_max,
                      TableLabel label = {});

/// Zero-mean Gaussian discretized onto unit bins. A symmetric support
/// yields exactly mirror-symmetric bins.
PmfTable discretized_gaussian_pmf(double sigma, int32_t support_min, int32_t support_max,
                                  TableLabel label = {});

/// Smallest symmetric support [-L, L] that keeps all but tail_mass of the
/// distribution, clamped to [-limit, limit].
std::pair<int32_t, int32_t> mass_support(const CdfFn& cdf,
                                         double tail_mass = kDefaultTailMass,
                                         int32_t limit = kDefaultSupportLimit);
std::pair<int32_t, int32_t> gaussian_support(double sigma,
                                             double tail_mass = kDefaultTailMass,
                                             int32_t limit = kDefaultSupportLimit);

/// The conditional model's predefined scales, ascending, with one cached
/// Gaussian pmf per scale. A predicted scale is served by the smallest
/// table scale that is >= it; anything above the top scale clamps to the
/// last table.
class ScaleTable {
public:
  explicit ScaleTable(std::vector<double> scales);
  static ScaleTable log_spaced(size_t count, double sigma_min, double sigma_max);
  static ScaleTable defaults() { return log_spaced(64, 0.11, 256.0); }

  size_t size() const { return scales_.size(); }
  double scale(size_t i) const { return scales_.at(i); }
  const std::vector<double>& scales() const { return scales_; }
  const PmfTable& table(size_t i) const { return tables_.at(i); }
  std::span<const PmfTable> tables() const { return tables_; }

  uint32_t assign(double sigma) const;
  std::vector<uint32_t> assign_scales(std::span<const float> sigmas) const;

private:
  std::vector<double> scales_;
  std::vector<PmfTable> tables_;
};

/// A flat symbol sequence plus, per symbol, the index of the pmf table
/// that codes it. The coder, the gap accounting and the adaptation all
/// consume this one view.
struct SymbolStream {
  std::vector<int32_t> symbols;
  std::vector<uint32_t> table_of;
  size_t size() const { return symbols.size(); }
};

/// Channel-indexed stream: symbol i is coded by table (i mod c).
SymbolStream factorized_stream(const LatentTensor& tensor, size_t table_count);

/// Conditional stream: symbol i is coded by the table assigned to its
/// predicted scale.
SymbolStream hyperprior_stream(const LatentTensor& tensor, const SideInfo& side,
                               const ScaleTable& scales);

/// Sum of -log2 p over the stream, accumulated in symbol order.
/// Throws CodingError on a symbol outside its table's support.
double ideal_bits(const SymbolStream& stream, std::span<const PmfTable> tables);

/// Per-table variant over precomputed counts aligned with the support.
double ideal_bits_for_counts(const PmfTable& table, std::span<const int64_t> counts);

void save_tables(std::span<const PmfTable> tables, const std::filesystem::path& path);
std::vector<PmfTable> load_tables(const std::filesystem::path& path);

} // namespace egap

#endif
