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

#include "egap/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <utility>

namespace egap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Nearest grid slot for a continuous position t in [0, levels-1], exact
// half-way ties rounding toward the lower index. Positions are snapped to
// the nearest half-integer first so a mathematically exact tie is not
// flipped by last-bit noise in the caller's arithmetic.
uint32_t grid_round(double t, uint32_t levels) {
  double twice = t * 2.0;
  double snapped = std::nearbyint(twice);
  if (std::fabs(twice - snapped) < 1e-9) twice = snapped;
  double j = std::ceil(twice / 2.0 - 0.5);
  if (!(j > 0.0)) return 0;
  if (j >= static_cast<double>(levels)) return levels - 1;
  return static_cast<uint32_t>(j);
}

} // namespace

const char* to_string(AdaptMethod method) {
  switch (method) {
    case AdaptMethod::None: return "none";
    case AdaptMethod::Gmm: return "gmm";
    case AdaptMethod::ZeroMean: return "zero-mean";
    case AdaptMethod::CenterBin: return "center-bin";
  }
  return "?";
}

ParamGrids::ParamGrids(uint32_t bits, int32_t support_min, int32_t support_max)
    : bits_(bits), mean_lo_(support_min), mean_hi_(support_max) {
  if (bits_ < 1 || bits_ > 16) throw ConfigError("param grids: bits out of range");
  if (support_min > support_max) throw ConfigError("param grids: inverted support");
}

uint32_t ParamGrids::quantize_sigma(double v) const {
  double x = std::clamp(v, kSigmaGridMin, kSigmaGridMax);
  double lo = std::log(kSigmaGridMin);
  double step = (std::log(kSigmaGridMax) - lo) / static_cast<double>(levels() - 1);
  return grid_round((std::log(x) - lo) / step, levels());
}

double ParamGrids::dequantize_sigma(uint32_t index) const {
  if (index >= levels()) throw ConfigError("param grids: sigma index out of range");
  double lo = std::log(kSigmaGridMin);
  double step = (std::log(kSigmaGridMax) - lo) / static_cast<double>(levels() - 1);
  return std::exp(lo + step * static_cast<double>(index));
}

uint32_t ParamGrids::quantize_weight(double v) const {
  double x = std::clamp(v, 0.0, 1.0);
  return grid_round(x * static_cast<double>(levels() - 1), levels());
}

double ParamGrids::dequantize_weight(uint32_t index) const {
  if (index >= levels()) throw ConfigError("param grids: weight index out of range");
  return static_cast<double>(index) / static_cast<double>(levels() - 1);
}

uint32_t ParamGrids::quantize_mean(double v) const {
  if (mean_hi_ == mean_lo_) return 0;
  double x = std::clamp(v, mean_lo_, mean_hi_);
  double step = (mean_hi_ - mean_lo_) / static_cast<double>(levels() - 1);
  return grid_round((x - mean_lo_) / step, levels());
}

double ParamGrids::dequantize_mean(uint32_t index) const {
  if (index >= levels()) throw ConfigError("param grids: mean index out of range");
  if (mean_hi_ == mean_lo_) return mean_lo_;
  double step = (mean_hi_ - mean_lo_) / static_cast<double>(levels() - 1);
  return mean_lo_ + step * static_cast<double>(index);
}

uint32_t ParamGrids::quantize_delta(double v) const {
  double x = std::clamp(v, -kDeltaGridLimit, kDeltaGridLimit);
  double step = 2.0 * kDeltaGridLimit / static_cast<double>(levels() - 1);
  return grid_round((x + kDeltaGridLimit) / step, levels());
}

double ParamGrids::dequantize_delta(uint32_t index) const {
  if (index >= levels()) throw ConfigError("param grids: delta index out of range");
  double step = 2.0 * kDeltaGridLimit / static_cast<double>(levels() - 1);
  return -kDeltaGridLimit + step * static_cast<double>(index);
}

void GmmParams::normalize_weights() {
  double sum = 0.0;
  for (const auto& c : comps) {
    if (c.weight < 0.0) throw ConfigError("mixture: negative weight");
    sum += c.weight;
  }
  if (!(sum > 0.0)) throw ConfigError("mixture: zero total weight");
  for (auto& c : comps) c.weight /= sum;
}

PmfTable truncated_gmm_pmf(const GmmParams& params, int32_t support_min, int32_t support_max,
                           TableLabel label) {
  if (params.comps.empty()) throw ConfigError("mixture: no components");
  for (const auto& c : params.comps) {
    if (!(c.sigma > 0.0)) throw ConfigError("mixture: non-positive sigma");
    if (c.weight < 0.0) throw ConfigError("mixture: negative weight");
  }
  size_t size = static_cast<size_t>(int64_t(support_max) - support_min + 1);
  std::vector<double> mass(size, 0.0);
  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  for (const auto& c : params.comps) {
    if (c.weight == 0.0) continue;
    double norm = c.weight * inv_sqrt_2pi / c.sigma;
    double inv2 = 1.0 / (2.0 * c.sigma * c.sigma);
    for (size_t i = 0; i < size; ++i) {
      double d = static_cast<double>(support_min + static_cast<int64_t>(i)) - c.mean;
      mass[i] += norm * std::exp(-d * d * inv2);
    }
  }
  return PmfTable(support_min, support_max, std::move(mass), label);
}

namespace {

double histogram_n(std::span<const int64_t> counts) {
  int64_t n = 0;
  for (int64_t c : counts) {
    if (c < 0) throw ConfigError("fit: negative count");
    n += c;
  }
  return static_cast<double>(n);
}

// sum_x h_x log2 pmf(x); -inf when the candidate cannot produce a pmf.
double fit_objective(const GmmParams& params, std::span<const int64_t> counts, int32_t lo,
                     int32_t hi) {
  try {
    PmfTable t = truncated_gmm_pmf(params, lo, hi);
    return -ideal_bits_for_counts(t, counts);
  } catch (const ConfigError&) {
    return -kInf;
  }
}

GmmParams em_step(const GmmParams& cur, std::span<const int64_t> counts, int32_t lo, int32_t hi,
                  double n) {
  size_t k = cur.comps.size();
  std::vector<double> nk(k, 0.0), sx(k, 0.0), sxx(k, 0.0), dens(k);
  for (size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    double x = static_cast<double>(lo + static_cast<int64_t>(i));
    double h = static_cast<double>(counts[i]);
    double m = 0.0;
    for (size_t j = 0; j < k; ++j) {
      const auto& c = cur.comps[j];
      double d = x - c.mean;
      dens[j] = c.weight * std::exp(-d * d / (2.0 * c.sigma * c.sigma)) / c.sigma;
      m += dens[j];
    }
    for (size_t j = 0; j < k; ++j) {
      double r = m > 0.0 ? dens[j] / m : 1.0 / static_cast<double>(k);
      double w = h * r;
      nk[j] += w;
      sx[j] += w * x;
      sxx[j] += w * x * x;
    }
  }
  GmmParams next = cur;
  for (size_t j = 0; j < k; ++j) {
    next.comps[j].weight = nk[j] / n;
    if (nk[j] > 0.0) {
      double mu = std::clamp(sx[j] / nk[j], static_cast<double>(lo), static_cast<double>(hi));
      double var = std::max(sxx[j] / nk[j] - (sx[j] / nk[j]) * (sx[j] / nk[j]), 0.0);
      next.comps[j].mean = mu;
      next.comps[j].sigma = std::clamp(std::sqrt(var), kSigmaGridMin, kSigmaGridMax);
    }
  }
  next.normalize_weights();
  return next;
}

GmmParams blend(const GmmParams& from, const GmmParams& to, double lambda) {
  GmmParams out = from;
  for (size_t j = 0; j < out.comps.size(); ++j) {
    out.comps[j].weight = (1.0 - lambda) * from.comps[j].weight + lambda * to.comps[j].weight;
    out.comps[j].mean = (1.0 - lambda) * from.comps[j].mean + lambda * to.comps[j].mean;
    out.comps[j].sigma = (1.0 - lambda) * from.comps[j].sigma + lambda * to.comps[j].sigma;
  }
  return out;
}

struct EmRun {
  GmmParams params;
  double objective;
  std::vector<double> trace;
};

EmRun run_em(GmmParams init, std::span<const int64_t> counts, int32_t lo, int32_t hi) {
  double n = histogram_n(counts);
  EmRun run{std::move(init), 0.0, {}};
  run.objective = fit_objective(run.params, counts, lo, hi);
  run.trace.push_back(run.objective);
  for (int iter = 0; iter < 200; ++iter) {
    GmmParams prop = em_step(run.params, counts, lo, hi, n);
    GmmParams cand = prop;
    double cobj = fit_objective(cand, counts, lo, hi);
    double lambda = 1.0;
    int halvings = 0;
    // The plain M-step maximizes the untruncated likelihood; when it dips
    // on the truncated objective, walk back toward the current point.
    while (cobj < run.objective && halvings < 10) {
      lambda *= 0.5;
      cand = blend(run.params, prop, lambda);
      cobj = fit_objective(cand, counts, lo, hi);
      ++halvings;
    }
    if (cobj < run.objective) break;
    double improve = cobj - run.objective;
    run.params = std::move(cand);
    run.objective = cobj;
    run.trace.push_back(cobj);
    if (improve < 1e-7 * std::max(1.0, n)) break;
  }
  return run;
}

GmmParams quantile_init(std::span<const int64_t> counts, int32_t lo, int32_t hi, uint32_t k) {
  double n = histogram_n(counts);
  double gsum = 0.0, gsq = 0.0;
  for (size_t i = 0; i < counts.size(); ++i) {
    double x = static_cast<double>(lo + static_cast<int64_t>(i));
    gsum += static_cast<double>(counts[i]) * x;
    gsq += static_cast<double>(counts[i]) * x * x;
  }
  double gmean = gsum / n;
  double gsigma =
      std::clamp(std::sqrt(std::max(gsq / n - gmean * gmean, 0.0)), kSigmaGridMin, kSigmaGridMax);

  GmmParams init;
  init.comps.resize(k);
  std::vector<double> nk(k, 0.0), sx(k, 0.0), sxx(k, 0.0);
  double before = 0.0;
  for (size_t i = 0; i < counts.size(); ++i) {
    double h = static_cast<double>(counts[i]);
    if (h == 0.0) continue;
    double x = static_cast<double>(lo + static_cast<int64_t>(i));
    // Split this bin's mass across the quantile windows it overlaps.
    for (uint32_t j = 0; j < k; ++j) {
      double wlo = n * static_cast<double>(j) / k;
      double whi = n * static_cast<double>(j + 1) / k;
      double m = std::min(before + h, whi) - std::max(before, wlo);
      if (m <= 0.0) continue;
      nk[j] += m;
      sx[j] += m * x;
      sxx[j] += m * x * x;
    }
    before += h;
  }
  for (uint32_t j = 0; j < k; ++j) {
    auto& c = init.comps[j];
    if (nk[j] > 0.0) {
      c.weight = nk[j] / n;
      c.mean = std::clamp(sx[j] / nk[j], static_cast<double>(lo), static_cast<double>(hi));
      double var = std::max(sxx[j] / nk[j] - (sx[j] / nk[j]) * (sx[j] / nk[j]), 0.0);
      c.sigma = std::clamp(std::sqrt(var), kSigmaGridMin, kSigmaGridMax);
    } else {
      c.weight = 1e-6;
      c.mean = gmean;
      c.sigma = gsigma;
    }
  }
  init.normalize_weights();
  return init;
}

size_t heaviest_component(const GmmParams& params) {
  size_t best = 0;
  for (size_t j = 1; j < params.comps.size(); ++j)
    if (params.comps[j].weight > params.comps[best].weight) best = j;
  return best;
}

// k-1 solution with its heaviest component split in two halves that keep
// the density identical, so this start begins at the k-1 objective.
GmmParams exact_split(const GmmParams& base) {
  GmmParams out = base;
  size_t j = heaviest_component(out);
  out.comps[j].weight *= 0.5;
  out.comps.push_back(out.comps[j]);
  return out;
}

GmmParams perturbed_split(const GmmParams& base, int32_t lo, int32_t hi) {
  GmmParams out = base;
  size_t j = heaviest_component(out);
  GmmComponent left = out.comps[j], right = out.comps[j];
  left.weight *= 0.5;
  right.weight *= 0.5;
  left.mean = std::clamp(left.mean - 0.5 * left.sigma, static_cast<double>(lo),
                         static_cast<double>(hi));
  right.mean = std::clamp(right.mean + 0.5 * right.sigma, static_cast<double>(lo),
                          static_cast<double>(hi));
  out.comps[j] = left;
  out.comps.push_back(right);
  return out;
}

} // namespace

FitResult fit_gmm(std::span<const int64_t> counts, int32_t support_min, int32_t support_max,
                  uint32_t k) {
  size_t size = static_cast<size_t>(int64_t(support_max) - support_min + 1);
  if (counts.size() != size) throw ConfigError("fit: counts not aligned with support");
  if (k < 1) throw ConfigError("fit: need at least one component");
  if (histogram_n(counts) < 1.0) throw ConfigError("fit: empty histogram");
  size_t occupied = 0;
  for (int64_t c : counts)
    if (c > 0) ++occupied;
  if (k > occupied)
    throw ConfigError("fit: " + std::to_string(k) + " components exceed " +
                      std::to_string(occupied) + " occupied bins");

  if (k == 1) {
    EmRun run = run_em(quantile_init(counts, support_min, support_max, 1), counts, support_min,
                       support_max);
    return FitResult{std::move(run.params), run.objective, std::move(run.trace)};
  }

  FitResult prev = fit_gmm(counts, support_min, support_max, k - 1);
  EmRun best = run_em(quantile_init(counts, support_min, support_max, k), counts, support_min,
                      support_max);
  for (auto& start : {exact_split(prev.params), perturbed_split(prev.params, support_min,
                                                                support_max)}) {
    EmRun run = run_em(start, counts, support_min, support_max);
    if (run.objective > best.objective) best = std::move(run);
  }
  return FitResult{std::move(best.params), best.objective, std::move(best.trace)};
}

FitResult fit_zero_mean_sigma(std::span<const int64_t> counts, int32_t support_min,
                              int32_t support_max) {
  size_t size = static_cast<size_t>(int64_t(support_max) - support_min + 1);
  if (counts.size() != size) throw ConfigError("fit: counts not aligned with support");
  double n = histogram_n(counts);
  if (n < 1.0) throw ConfigError("fit: empty histogram");

  auto eval = [&](double sigma) {
    return fit_objective(GmmParams{{{1.0, 0.0, sigma}}}, counts, support_min, support_max);
  };

  double sq = 0.0;
  for (size_t i = 0; i < counts.size(); ++i) {
    double x = static_cast<double>(support_min + static_cast<int64_t>(i));
    sq += static_cast<double>(counts[i]) * x * x;
  }
  double moment = std::clamp(std::sqrt(sq / n), kSigmaGridMin, kSigmaGridMax);
  double moment_obj = eval(moment);

  double a = std::log(kSigmaGridMin), b = std::log(kSigmaGridMax);
  constexpr double ratio = 0.6180339887498949;
  double x1 = b - ratio * (b - a);
  double x2 = a + ratio * (b - a);
  double f1 = eval(std::exp(x1));
  double f2 = eval(std::exp(x2));
  for (int i = 0; i < 100; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + ratio * (b - a);
      f2 = eval(std::exp(x2));
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - ratio * (b - a);
      f1 = eval(std::exp(x1));
    }
  }
  double searched = std::exp(0.5 * (a + b));
  double searched_obj = eval(searched);

  double sigma = searched_obj >= moment_obj ? searched : moment;
  double obj = std::max(searched_obj, moment_obj);
  return FitResult{GmmParams{{{1.0, 0.0, sigma}}}, obj, {moment_obj, obj}};
}

double compute_center_beta(const PmfTable& learned, std::span<const int64_t> counts) {
  if (counts.size() != learned.size())
    throw ConfigError("center-bin: counts not aligned with support");
  double n = histogram_n(counts);
  if (n < 1.0) throw ConfigError("center-bin: empty histogram");
  if (learned.size() == 1) return 0.0;

  double center_mass = learned.prob(0);
  size_t center = static_cast<size_t>(-int64_t(learned.support_min()));
  double h0 = static_cast<double>(counts[center]) / n;
  double beta = center_mass - h0;

  // Feasibility margins keep the integer rebuild valid even after grid
  // rounding and a +-1 refinement step on the transmitted index.
  double s = static_cast<double>(learned.size());
  double beta_max = std::min(kDeltaGridLimit, center_mass - (s + 64.0) * kPmfFloor);
  double beta_min = std::max(-kDeltaGridLimit,
                             -(1.0 - center_mass) + (2.0 * s + 128.0) * kPmfFloor);
  if (beta_min > beta_max) return 0.0;
  return std::clamp(beta, beta_min, beta_max);
}

PmfTable center_bin_pmf(const PmfTable& learned, double beta) {
  if (beta == 0.0) return learned;
  if (learned.size() == 1)
    throw ConfigError("center-bin: single-bin table admits no correction");
  double center_mass = learned.prob(0);
  if (!(beta < center_mass))
    throw ConfigError("center-bin: correction removes the whole center mass");
  double scale = 1.0 + beta / (1.0 - center_mass);
  if (scale < 0.0)
    throw ConfigError("center-bin: correction exceeds the off-center mass");
  std::vector<double> mass(learned.size());
  for (size_t i = 0; i < learned.size(); ++i) {
    int64_t sym = learned.support_min() + static_cast<int64_t>(i);
    mass[i] = sym == 0 ? center_mass - beta : learned.probs()[i] * scale;
  }
  return PmfTable(learned.support_min(), learned.support_max(), std::move(mass), learned.label());
}

uint32_t param_cost_bits(const MethodConfig& config) {
  switch (config.method) {
    case AdaptMethod::None: return 0;
    case AdaptMethod::Gmm: return 3 * config.k * config.param_bits;
    case AdaptMethod::ZeroMean: return config.param_bits;
    case AdaptMethod::CenterBin: return config.param_bits;
  }
  throw ConfigError("param cost: bad method tag");
}

double AdaptationRecord::selected_param_bits() const {
  double bits = 0.0;
  for (const auto& t : targeted)
    if (t.selected) bits += t.param_bits;
  return bits;
}

double AdaptationRecord::gain_bits() const {
  double bits = 0.0;
  for (const auto& t : targeted)
    if (t.selected) bits += t.learned_bits - t.adapted_bits - t.param_bits;
  return bits;
}

GmmParams gmm_from_indices(std::span<const uint32_t> indices, uint32_t k,
                           const ParamGrids& grids) {
  if (indices.size() != size_t(3) * k)
    throw ConfigError("mixture indices: expected " + std::to_string(3 * k) + " values, have " +
                      std::to_string(indices.size()));
  GmmParams params;
  params.comps.resize(k);
  for (uint32_t j = 0; j < k; ++j) {
    params.comps[j].weight = grids.dequantize_weight(indices[3 * j]);
    params.comps[j].mean = grids.dequantize_mean(indices[3 * j + 1]);
    params.comps[j].sigma = grids.dequantize_sigma(indices[3 * j + 2]);
  }
  return params;
}

namespace {

PmfTable adapted_pmf_from_indices(const PmfTable& learned, const MethodConfig& config,
                                  std::span<const uint32_t> indices) {
  ParamGrids grids(config.param_bits, learned.support_min(), learned.support_max());
  switch (config.method) {
    case AdaptMethod::Gmm:
      return truncated_gmm_pmf(gmm_from_indices(indices, config.k, grids), learned.support_min(),
                               learned.support_max(), learned.label());
    case AdaptMethod::ZeroMean: {
      if (indices.size() != 1) throw ConfigError("zero-mean indices: expected one value");
      GmmParams p{{{1.0, 0.0, grids.dequantize_sigma(indices[0])}}};
      return truncated_gmm_pmf(p, learned.support_min(), learned.support_max(), learned.label());
    }
    case AdaptMethod::CenterBin: {
      if (indices.size() != 1) throw ConfigError("center-bin indices: expected one value");
      return center_bin_pmf(learned, grids.dequantize_delta(indices[0]));
    }
    case AdaptMethod::None: break;
  }
  throw ConfigError("adapted table: bad method tag");
}

double adapted_bits_or_inf(const PmfTable& learned, const MethodConfig& config,
                           std::span<const uint32_t> indices, std::span<const int64_t> counts) {
  try {
    return ideal_bits_for_counts(adapted_pmf_from_indices(learned, config, indices), counts);
  } catch (const ConfigError&) {
    return kInf;
  }
}

// One pass of +-1 probing per transmitted index, keeping strict wins.
double refine_indices(const PmfTable& learned, const MethodConfig& config,
                      std::vector<uint32_t>& indices, std::span<const int64_t> counts,
                      const ParamGrids& grids, double current_bits) {
  for (size_t pos = 0; pos < indices.size(); ++pos) {
    uint32_t keep = indices[pos];
    uint32_t best = keep;
    double best_bits = current_bits;
    for (int dir : {-1, +1}) {
      int64_t cand = int64_t(keep) + dir;
      if (cand < 0 || cand >= int64_t(grids.levels())) continue;
      indices[pos] = static_cast<uint32_t>(cand);
      double bits = adapted_bits_or_inf(learned, config, indices, counts);
      if (bits < best_bits) {
        best_bits = bits;
        best = static_cast<uint32_t>(cand);
      }
    }
    indices[pos] = best;
    current_bits = best_bits;
  }
  return current_bits;
}

} // namespace

AdaptationRecord select_tables(const HistogramSet& hist, std::span<const PmfTable> tables,
                               const MethodConfig& config) {
  if (hist.counts.size() != tables.size())
    throw ConfigError("select: histogram not aligned with tables");
  if (config.param_bits < 1 || config.param_bits > 16)
    throw ConfigError("select: parameter bits out of range");
  AdaptationRecord record;
  record.config = config;
  if (config.method == AdaptMethod::None) return record;
  if (config.method == AdaptMethod::Gmm && config.k < 1)
    throw ConfigError("select: need at least one mixture component");
  size_t t_count = config.top_tables == 0 ? tables.size() : config.top_tables;
  if (t_count > tables.size())
    throw ConfigError("select: targeting " + std::to_string(t_count) + " of " +
                      std::to_string(tables.size()) + " tables");

  std::vector<double> learned_bits(tables.size());
  for (size_t t = 0; t < tables.size(); ++t)
    learned_bits[t] = ideal_bits_for_counts(tables[t], hist.counts[t]);

  std::vector<size_t> order(tables.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (learned_bits[a] != learned_bits[b]) return learned_bits[a] > learned_bits[b];
    return a < b;
  });
  order.resize(t_count);

  for (size_t t : order) {
    const PmfTable& table = tables[t];
    std::span<const int64_t> counts = hist.counts[t];
    TableAdaptation ta;
    ta.table = static_cast<uint32_t>(t);
    ta.learned_bits = learned_bits[t];
    ta.param_bits = static_cast<double>(param_cost_bits(config));

    if (hist.totals[t] == 0) {
      // Nothing observed: no histogram to fit, keep the learned table.
      ta.adapted_bits = ta.learned_bits;
      ta.param_bits = 0.0;
      record.targeted.push_back(std::move(ta));
      continue;
    }

    ParamGrids grids(config.param_bits, table.support_min(), table.support_max());
    std::vector<uint32_t> indices;
    switch (config.method) {
      case AdaptMethod::Gmm: {
        size_t occupied = 0;
        for (int64_t c : counts)
          if (c > 0) ++occupied;
        uint32_t k_eff = static_cast<uint32_t>(
            std::min<size_t>(config.k, std::max<size_t>(occupied, 1)));
        FitResult fit = fit_gmm(counts, table.support_min(), table.support_max(), k_eff);
        for (const auto& c : fit.params.comps) {
          indices.push_back(grids.quantize_weight(c.weight));
          indices.push_back(grids.quantize_mean(c.mean));
          indices.push_back(grids.quantize_sigma(c.sigma));
        }
        // Pad to the configured component count with zero-weight slots so
        // the transmitted layout stays fixed.
        for (uint32_t j = k_eff; j < config.k; ++j) {
          indices.push_back(grids.quantize_weight(0.0));
          indices.push_back(grids.quantize_mean(0.0));
          indices.push_back(grids.quantize_sigma(kSigmaGridMin));
        }
        break;
      }
      case AdaptMethod::ZeroMean: {
        FitResult fit = fit_zero_mean_sigma(counts, table.support_min(), table.support_max());
        indices.push_back(grids.quantize_sigma(fit.params.comps[0].sigma));
        break;
      }
      case AdaptMethod::CenterBin: {
        indices.push_back(grids.quantize_delta(compute_center_beta(table, counts)));
        break;
      }
      case AdaptMethod::None:
        break;
    }

    double bits = adapted_bits_or_inf(table, config, indices, counts);
    bits = refine_indices(table, config, indices, counts, grids, bits);
    ta.indices = std::move(indices);
    ta.adapted_bits = bits;
    ta.selected = ta.learned_bits - ta.adapted_bits - ta.param_bits > 0.0;
    record.targeted.push_back(std::move(ta));
  }
  return record;
}

ModelStats model_stats(std::string name, const HistogramSet& hist,
                       std::span<const PmfTable> tables, const AdaptationRecord& record) {
  ModelStats stats;
  stats.name = std::move(name);
  const GapBits gb = gap_bits(hist, tables);
  stats.learned_bits = gb.learned_total;
  stats.optimal_bits = gb.optimal_total;
  const auto adapted = apply_adaptations(tables, record);
  double bits = 0.0;
  for (size_t t = 0; t < adapted.size(); ++t)
    bits += ideal_bits_for_counts(adapted[t], hist.counts[t]);
  stats.adapted_bits = bits;
  stats.param_bits = record.selected_param_bits();
  stats.signal_bits = record.signal_bits();
  return stats;
}

std::vector<PmfTable> apply_adaptations(std::span<const PmfTable> tables,
                                        const AdaptationRecord& record) {
  std::vector<PmfTable> out(tables.begin(), tables.end());
  for (const auto& ta : record.targeted) {
    if (!ta.selected) continue;
    if (ta.table >= out.size())
      throw ConfigError("apply: table index " + std::to_string(ta.table) + " out of range");
    out[ta.table] = adapted_pmf_from_indices(tables[ta.table], record.config, ta.indices);
  }
  return out;
}

} // namespace egap
