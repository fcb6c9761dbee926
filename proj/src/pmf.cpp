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

#include "egap/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "egap/bits.hpp"

namespace egap {

namespace {

// W. J. Cody's rational approximations for erf/erfc (Math. Comp. 23, 1969).
// Coefficients from the CALERF reference routine.

double erf_small(double x) { // |x| <= 0.46875
  static constexpr double a[5] = {3.16112374387056560e+00, 1.13864154151050156e+02,
                                  3.77485237685302021e+02, 3.20937758913846947e+03,
                                  1.85777706184603153e-01};
  static constexpr double b[4] = {2.36012909523441209e+01, 2.44024637934444173e+02,
                                  1.28261652607737228e+03, 2.84423683343917062e+03};
  double z = x * x;
  double num = a[4] * z;
  double den = z;
  for (int i = 0; i < 3; ++i) {
    num = (num + a[i]) * z;
    den = (den + b[i]) * z;
  }
  return x * (num + a[3]) / (den + b[3]);
}

// exp(-x^2) split into an exact-coarse and a small-residual factor, which
// shaves the last bits of argument-rounding error.
double exp_neg_sq(double x) {
  double coarse = std::floor(x * 16.0) / 16.0;
  double del = (x - coarse) * (x + coarse);
  return std::exp(-coarse * coarse) * std::exp(-del);
}

double erfc_mid(double x) { // 0.46875 < x <= 4
  static constexpr double c[9] = {5.64188496988670089e-01, 8.88314979438837594e+00,
                                  6.61191906371416295e+01, 2.98635138197400131e+02,
                                  8.81952221241769090e+02, 1.71204761263407058e+03,
                                  2.05107837782607147e+03, 1.23033935479799725e+03,
                                  2.15311535474403846e-08};
  static constexpr double d[8] = {1.57449261107098347e+01, 1.17693950891312499e+02,
                                  5.37181101862009858e+02, 1.62138957456669019e+03,
                                  3.29079923573345963e+03, 4.36261909014324716e+03,
                                  3.43936767414372164e+03, 1.23033935480374942e+03};
  double num = c[8] * x;
  double den = x;
  for (int i = 0; i < 7; ++i) {
    num = (num + c[i]) * x;
    den = (den + d[i]) * x;
  }
  return exp_neg_sq(x) * (num + c[7]) / (den + d[7]);
}

double erfc_large(double x) { // x > 4
  static constexpr double p[6] = {3.05326634961232344e-01, 3.60344899949804439e-01,
                                  1.25781726111229246e-01, 1.60837851487422766e-02,
                                  6.58749161529837803e-04, 1.63153871373020978e-02};
  static constexpr double q[5] = {2.56852019228982242e+00, 1.87295284992346047e+00,
                                  5.27905102951428412e-01, 6.05183413124413191e-02,
                                  2.33520497626869185e-03};
  if (x > 26.543) return 0.0; // exp(-x^2) underflows
  double z = 1.0 / (x * x);
  double num = p[5] * z;
  double den = z;
  for (int i = 0; i < 4; ++i) {
    num = (num + p[i]) * z;
    den = (den + q[i]) * z;
  }
  double r = z * (num + p[4]) / (den + q[4]);
  constexpr double inv_sqrt_pi = 0.564189583547756287;
  return exp_neg_sq(x) * (inv_sqrt_pi - r) / x;
}

constexpr uint16_t kTableVersion = 1;
constexpr uint32_t kMaxTables = 1u << 20;
constexpr uint32_t kMaxSupport = 1u << 16;

} // namespace

double erfc_rational(double x) {
  double ax = std::fabs(x);
  if (ax <= 0.46875) return 1.0 - erf_small(x);
  double v = (ax <= 4.0) ? erfc_mid(ax) : erfc_large(ax);
  return x < 0.0 ? 2.0 - v : v;
}

double normal_cdf(double x) { return 0.5 * erfc_rational(-x / std::numbers::sqrt2); }

double gaussian_bin_mass(double x, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("gaussian_bin_mass: sigma must be positive");
  double inv = 1.0 / (sigma * std::numbers::sqrt2);
  return 0.5 * (erfc_rational((x - 0.5) * inv) - erfc_rational((x + 0.5) * inv));
}

std::string to_string(const TableLabel& label) {
  return std::string(label.model == ModelKind::Factorized ? "factorized" : "hyperprior") + "/" +
         std::to_string(label.index);
}

void floor_and_normalize(std::vector<double>& mass) {
  if (mass.empty()) throw ConfigError("pmf: empty support");
  if (static_cast<double>(mass.size()) * kPmfFloor >= 1.0)
    throw ConfigError("pmf: support of " + std::to_string(mass.size()) +
                      " bins cannot hold the probability floor");
  double sum = 0.0;
  for (double m : mass) {
    if (!std::isfinite(m) || m < 0.0) throw ConfigError("pmf: negative or non-finite mass");
    sum += m;
  }
  if (!(sum > 0.0)) throw ConfigError("pmf: zero total mass");
  for (double& m : mass) m /= sum;

  double above = 0.0;
  for (double& m : mass) {
    m = std::max(m, kPmfFloor);
    above += m - kPmfFloor;
  }
  double budget = 1.0 - static_cast<double>(mass.size()) * kPmfFloor;
  if (above <= 0.0) {
    std::fill(mass.begin(), mass.end(), 1.0 / static_cast<double>(mass.size()));
    return;
  }
  double scale = budget / above;
  for (double& m : mass) m = kPmfFloor + (m - kPmfFloor) * scale;
}

PmfTable::PmfTable(int32_t support_min, int32_t support_max, std::vector<double> mass,
                   TableLabel label)
    : support_min_(support_min), support_max_(support_max), probs_(std::move(mass)),
      label_(label) {
  if (support_min_ > 0 || support_max_ < 0)
    throw ConfigError("pmf " + to_string(label_) + ": support [" + std::to_string(support_min_) +
                      ", " + std::to_string(support_max_) + "] does not cover zero");
  size_t want = static_cast<size_t>(int64_t(support_max_) - support_min_ + 1);
  if (probs_.size() != want)
    throw ConfigError("pmf " + to_string(label_) + ": " + std::to_string(probs_.size()) +
                      " bins for a support of " + std::to_string(want));
  floor_and_normalize(probs_);
}

double PmfTable::prob(int32_t symbol) const {
  if (!contains(symbol))
    throw CodingError("symbol " + std::to_string(symbol) + " outside support [" +
                      std::to_string(support_min_) + ", " + std::to_string(support_max_) +
                      "] of table " + to_string(label_));
  return probs_[static_cast<size_t>(int64_t(symbol) - support_min_)];
}

PmfTable pmf_from_cdf(const CdfFn& cdf, int32_t support_min, int32_t support_max,
                      TableLabel label) {
  if (support_min > support_max) throw ConfigError("pmf_from_cdf: inverted support");
  std::vector<double> mass;
  mass.reserve(static_cast<size_t>(int64_t(support_max) - support_min + 1));
  double hi = cdf(support_min - 0.5);
  for (int64_t x = support_min; x <= support_max; ++x) {
    double lo = hi;
    hi = cdf(static_cast<double>(x) + 0.5);
    mass.push_back(std::max(hi - lo, 0.0));
  }
  return PmfTable(support_min, support_max, std::move(mass), label);
}

PmfTable discretized_gaussian_pmf(double sigma, int32_t support_min, int32_t support_max,
                                  TableLabel label) {
  if (!(sigma > 0.0)) throw ConfigError("discretized_gaussian_pmf: sigma must be positive");
  if (support_min > 0 || support_max < 0)
    throw ConfigError("discretized_gaussian_pmf: support does not cover zero");
  std::vector<double> mass(static_cast<size_t>(int64_t(support_max) - support_min + 1));
  // Fill from |x| so a symmetric support is mirror-symmetric bit-for-bit.
  for (int64_t x = 0; x <= std::max<int64_t>(support_max, -int64_t(support_min)); ++x) {
    double m = gaussian_bin_mass(static_cast<double>(x), sigma);
    if (x <= support_max) mass[static_cast<size_t>(x - support_min)] = m;
    if (-x >= support_min && x > 0) mass[static_cast<size_t>(-x - support_min)] = m;
  }
  return PmfTable(support_min, support_max, std::move(mass), label);
}

std::pair<int32_t, int32_t> mass_support(const CdfFn& cdf, double tail_mass, int32_t limit) {
  if (!(tail_mass > 0.0 && tail_mass < 1.0)) throw ConfigError("mass_support: bad tail mass");
  if (limit < 0) throw ConfigError("mass_support: negative limit");
  for (int32_t l = 0; l < limit; ++l) {
    double inside = cdf(l + 0.5) - cdf(-l - 0.5);
    if (1.0 - inside < tail_mass) return {-l, l};
  }
  return {-limit, limit};
}

std::pair<int32_t, int32_t> gaussian_support(double sigma, double tail_mass, int32_t limit) {
  if (!(sigma > 0.0)) throw ConfigError("gaussian_support: sigma must be positive");
  return mass_support([sigma](double x) { return normal_cdf(x / sigma); }, tail_mass, limit);
}

ScaleTable::ScaleTable(std::vector<double> scales) : scales_(std::move(scales)) {
  if (scales_.size() < 2) throw ConfigError("scale table: need at least two scales");
  for (size_t i = 0; i < scales_.size(); ++i) {
    if (!(scales_[i] > 0.0)) throw ConfigError("scale table: non-positive scale");
    if (i > 0 && !(scales_[i] > scales_[i - 1]))
      throw ConfigError("scale table: scales must be strictly ascending");
  }
  tables_.reserve(scales_.size());
  for (size_t i = 0; i < scales_.size(); ++i) {
    auto [lo, hi] = gaussian_support(scales_[i]);
    tables_.push_back(discretized_gaussian_pmf(
        scales_[i], lo, hi, TableLabel{ModelKind::Hyperprior, static_cast<uint32_t>(i)}));
  }
}

ScaleTable ScaleTable::log_spaced(size_t count, double sigma_min, double sigma_max) {
  if (count < 2) throw ConfigError("scale table: need at least two scales");
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min))
    throw ConfigError("scale table: need 0 < sigma_min < sigma_max");
  std::vector<double> scales(count);
  double lo = std::log(sigma_min);
  double step = (std::log(sigma_max) - lo) / static_cast<double>(count - 1);
  for (size_t i = 0; i < count; ++i) scales[i] = std::exp(lo + step * static_cast<double>(i));
  scales.front() = sigma_min;
  scales.back() = sigma_max;
  return ScaleTable(std::move(scales));
}

uint32_t ScaleTable::assign(double sigma) const {
  if (!(sigma > 0.0)) throw ConfigError("scale assignment: non-positive sigma");
  auto it = std::lower_bound(scales_.begin(), scales_.end(), sigma);
  if (it == scales_.end()) return static_cast<uint32_t>(scales_.size() - 1);
  return static_cast<uint32_t>(it - scales_.begin());
}

std::vector<uint32_t> ScaleTable::assign_scales(std::span<const float> sigmas) const {
  std::vector<uint32_t> out(sigmas.size());
  for (size_t i = 0; i < sigmas.size(); ++i) out[i] = assign(static_cast<double>(sigmas[i]));
  return out;
}

SymbolStream factorized_stream(const LatentTensor& tensor, size_t table_count) {
  if (tensor.shape.c != table_count)
    throw ConfigError("factorized stream: " + std::to_string(tensor.shape.c) +
                      " channels but " + std::to_string(table_count) + " tables");
  SymbolStream s;
  s.symbols = tensor.symbols;
  s.table_of.resize(tensor.symbols.size());
  for (size_t i = 0; i < s.table_of.size(); ++i) s.table_of[i] = tensor.channel_of(i);
  return s;
}

SymbolStream hyperprior_stream(const LatentTensor& tensor, const SideInfo& side,
                               const ScaleTable& scales) {
  if (side.scales.size() != tensor.symbols.size())
    throw ConfigError("hyperprior stream: side-info length does not match tensor");
  SymbolStream s;
  s.symbols = tensor.symbols;
  s.table_of = scales.assign_scales(side.scales);
  return s;
}

double ideal_bits(const SymbolStream& stream, std::span<const PmfTable> tables) {
  double bits = 0.0;
  for (size_t i = 0; i < stream.symbols.size(); ++i) {
    uint32_t t = stream.table_of[i];
    if (t >= tables.size())
      throw ConfigError("ideal_bits: table index " + std::to_string(t) + " out of range");
    bits -= std::log2(tables[t].prob(stream.symbols[i]));
  }
  return bits;
}

double ideal_bits_for_counts(const PmfTable& table, std::span<const int64_t> counts) {
  if (counts.size() != table.size())
    throw ConfigError("ideal_bits_for_counts: counts not aligned with support");
  double bits = 0.0;
  for (size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0) throw ConfigError("ideal_bits_for_counts: negative count");
    if (counts[i] > 0) bits -= static_cast<double>(counts[i]) * std::log2(table.probs()[i]);
  }
  return bits;
}

void save_tables(std::span<const PmfTable> tables, const std::filesystem::path& path) {
  if (tables.empty()) throw ConfigError("save_tables: no tables");
  ByteWriter w;
  w.tag("PMFT");
  w.u16(kTableVersion);
  w.u32(static_cast<uint32_t>(tables.size()));
  for (const auto& t : tables) {
    w.u8(static_cast<uint8_t>(t.label().model));
    w.u32(t.label().index);
    w.i32(t.support_min());
    w.i32(t.support_max());
    for (double p : t.probs()) w.f64(p);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  const auto& bytes = w.data();
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

std::vector<PmfTable> load_tables(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw IoError("cannot open " + path.string());
  std::streamsize n = f.tellg();
  f.seekg(0);
  std::vector<uint8_t> bytes(static_cast<size_t>(n));
  f.read(reinterpret_cast<char*>(bytes.data()), n);
  if (!f) throw IoError("read failed for " + path.string());

  ByteReader r(bytes, "PMFT header");
  if (!r.tag_matches("PMFT")) throw ParseError("PMFT header: bad magic at offset 0");
  uint16_t version = r.u16();
  if (version != kTableVersion)
    throw ParseError("PMFT header: unsupported version " + std::to_string(version));
  uint32_t count = r.u32();
  if (count == 0 || count > kMaxTables)
    throw ParseError("PMFT header: implausible table count " + std::to_string(count));
  std::vector<PmfTable> tables;
  tables.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    r.set_chunk("PMFT table " + std::to_string(i));
    size_t at = r.offset();
    uint8_t model = r.u8();
    if (model > 1)
      throw ParseError(r.chunk() + ": bad model tag at offset " + std::to_string(at));
    uint32_t index = r.u32();
    int32_t lo = r.i32();
    int32_t hi = r.i32();
    if (lo > hi || int64_t(hi) - lo + 1 > kMaxSupport)
      throw ParseError(r.chunk() + ": bad support at offset " + std::to_string(at + 5));
    std::vector<double> mass(static_cast<size_t>(int64_t(hi) - lo + 1));
    for (auto& m : mass) m = r.f64();
    try {
      tables.emplace_back(lo, hi, std::move(mass),
                          TableLabel{static_cast<ModelKind>(model), index});
    } catch (const ConfigError& e) {
      throw ParseError(r.chunk() + ": " + e.what());
    }
  }
  r.expect_end();
  return tables;
}

} // namespace egap
