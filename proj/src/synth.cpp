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

#include "egap/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace egap {

namespace {

int32_t round_clamp(double y, int32_t lo, int32_t hi) {
  long long r = std::llround(y); // llround rounds halfway cases away from zero
  return static_cast<int32_t>(std::clamp<long long>(r, lo, hi));
}

} // namespace

double ChannelDist::cdf(double x) const {
  switch (family) {
    case DistFamily::Gaussian:
      return normal_cdf((x - mean) / sigma);
    case DistFamily::Laplacian: {
      double b = sigma / std::numbers::sqrt2;
      double z = (x - mean) / b;
      return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
    }
    case DistFamily::Mixture2:
      return (1.0 - weight2) * normal_cdf((x - mean) / sigma) +
             weight2 * normal_cdf((x - mean2) / sigma2);
  }
  throw ConfigError("channel dist: bad family tag");
}

void ChannelDist::validate() const {
  if (!(sigma > 0.0)) throw ConfigError("channel dist: scale must be positive");
  if (!std::isfinite(mean)) throw ConfigError("channel dist: non-finite mean");
  if (family == DistFamily::Mixture2) {
    if (!(sigma2 > 0.0)) throw ConfigError("channel dist: second scale must be positive");
    if (!std::isfinite(mean2)) throw ConfigError("channel dist: non-finite second mean");
    if (!(weight2 >= 0.0 && weight2 <= 1.0))
      throw ConfigError("channel dist: mixture weight outside [0, 1]");
  }
}

double Sampler::normal() {
  // Polar Box-Muller; the rejected-area loop terminates with probability 1.
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * rng_.uniform() - 1.0;
    v = 2.0 * rng_.uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  has_spare_ = true;
  return u * m;
}

double Sampler::draw(const ChannelDist& dist) {
  switch (dist.family) {
    case DistFamily::Gaussian:
      return dist.mean + dist.sigma * normal();
    case DistFamily::Laplacian: {
      double b = dist.sigma / std::numbers::sqrt2;
      double u = rng_.uniform_pos() - 0.5;
      double sgn = u < 0.0 ? -1.0 : 1.0;
      return dist.mean - b * sgn * std::log(1.0 - 2.0 * std::fabs(u));
    }
    case DistFamily::Mixture2:
      if (rng_.uniform() < dist.weight2) return dist.mean2 + dist.sigma2 * normal();
      return dist.mean + dist.sigma * normal();
  }
  throw ConfigError("channel dist: bad family tag");
}

namespace {

std::vector<ChannelDist> broadcast(const std::vector<ChannelDist>& dists, uint32_t c,
                                   const char* which) {
  if (dists.size() != c && dists.size() != 1)
    throw ConfigError(std::string(which) + " dists: have " + std::to_string(dists.size()) +
                      " for " + std::to_string(c) + " channels");
  std::vector<ChannelDist> out;
  out.reserve(c);
  for (uint32_t i = 0; i < c; ++i) {
    const ChannelDist& d = dists.size() == 1 ? dists[0] : dists[i];
    d.validate();
    out.push_back(d);
  }
  return out;
}

} // namespace

std::vector<ChannelDist> resolve_true_dists(const SynthSpec& spec) {
  if (spec.shape.volume() == 0) throw ConfigError("synth: empty shape");
  if (spec.true_dist.empty()) throw ConfigError("synth: no true dists");
  return broadcast(spec.true_dist, spec.shape.c, "true");
}

std::vector<ChannelDist> resolve_dists(const SynthSpec& spec) {
  auto truth = resolve_true_dists(spec);
  if (!spec.learned_dist.empty()) return broadcast(spec.learned_dist, spec.shape.c, "learned");
  if (!(spec.mismatch_scale > 0.0)) throw ConfigError("synth: mismatch scale must be positive");
  std::vector<ChannelDist> learned = truth;
  for (auto& d : learned) {
    d.sigma *= spec.mismatch_scale;
    d.mean += spec.mismatch_mean;
    if (d.family == DistFamily::Mixture2) {
      d.sigma2 *= spec.mismatch_scale;
      d.mean2 += spec.mismatch_mean;
    }
  }
  return learned;
}

FactorizedSynth synthesize_factorized(const SynthSpec& spec, Role role) {
  auto truth = resolve_true_dists(spec);
  auto learned = resolve_dists(spec);

  FactorizedSynth out;
  out.learned = learned;
  out.tables.reserve(spec.shape.c);
  for (uint32_t ch = 0; ch < spec.shape.c; ++ch) {
    const ChannelDist& d = learned[ch];
    auto [lo, hi] = mass_support([&d](double x) { return d.cdf(x); });
    out.tables.push_back(pmf_from_cdf([&d](double x) { return d.cdf(x); }, lo, hi,
                                      TableLabel{ModelKind::Factorized, ch}));
  }

  out.tensor.shape = spec.shape;
  out.tensor.role = role;
  out.tensor.symbols.resize(spec.shape.volume());
  Sampler sampler(spec.seed);
  for (size_t i = 0; i < out.tensor.symbols.size(); ++i) {
    uint32_t ch = out.tensor.channel_of(i);
    double y = sampler.draw(truth[ch]);
    out.tensor.symbols[i] =
        round_clamp(y, out.tables[ch].support_min(), out.tables[ch].support_max());
  }
  return out;
}

HyperSynth synthesize_hyperprior_main(const SynthSpec& spec, const ScaleTable& scales) {
  auto truth = resolve_true_dists(spec);
  auto learned = resolve_dists(spec);
  for (const auto& d : learned)
    if (d.family != DistFamily::Gaussian)
      throw ConfigError("hyperprior synth: learned dists must be Gaussian");

  // Assign from the float32-rounded scale the side info actually carries,
  // so synthesis and coding agree on the winning table.
  std::vector<float> sigma_f(spec.shape.c);
  std::vector<uint32_t> table_of_channel(spec.shape.c);
  for (uint32_t ch = 0; ch < spec.shape.c; ++ch) {
    sigma_f[ch] = static_cast<float>(learned[ch].sigma);
    if (!(sigma_f[ch] > 0.0f)) throw ConfigError("hyperprior synth: scale underflows float32");
    table_of_channel[ch] = scales.assign(static_cast<double>(sigma_f[ch]));
  }

  HyperSynth out;
  out.main.shape = spec.shape;
  out.main.role = Role::Main;
  uint64_t volume = spec.shape.volume();
  out.main.symbols.resize(volume);
  out.side_info.means.resize(volume);
  out.side_info.scales.resize(volume);
  Sampler sampler(spec.seed);
  for (uint64_t i = 0; i < volume; ++i) {
    uint32_t ch = out.main.channel_of(i);
    const PmfTable& table = scales.table(table_of_channel[ch]);
    double y = sampler.draw(truth[ch]);
    out.main.symbols[i] =
        round_clamp(y - learned[ch].mean, table.support_min(), table.support_max());
    out.side_info.means[i] = static_cast<float>(learned[ch].mean);
    out.side_info.scales[i] = sigma_f[ch];
  }
  return out;
}

} // namespace egap
