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

#ifndef EGAP_SYNTH_HPP
#define EGAP_SYNTH_HPP

#include <cstdint>
#include <vector>

#include "egap/latent.hpp"
#include "egap/pmf.hpp"
#include "egap/rng.hpp"

namespace egap {

enum class DistFamily : uint8_t { Gaussian, Laplacian, Mixture2 };

/// One channel's continuous latent distribution. sigma is always the
/// standard deviation; Mixture2 adds a second Gaussian component with
/// weight2 in [0, 1] against the first.
struct ChannelDist {
  DistFamily family = DistFamily::Gaussian;
  double mean = 0.0;
  double sigma = 1.0;
  double weight2 = 0.0;
  double mean2 = 0.0;
  double sigma2 = 1.0;

  double cdf(double x) const;
  void validate() const;
};

/// Seeded draw state. The Box-Muller spare lives here, not in any global,
/// so equal seeds give equal streams regardless of prior calls.
class Sampler {
public:
  explicit Sampler(uint64_t seed) : rng_(seed) {}
  double normal();
  double draw(const ChannelDist& dist);

private:
  Rng rng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Recipe for a synthetic latent tensor: a true distribution the samples
/// are drawn from and a learned distribution the coder will assume. An
/// empty learned list derives one from the truth via the mismatch knobs
/// (learned sigma = true sigma * mismatch_scale, learned mean = true
/// mean + mismatch_mean).
struct SynthSpec {
  uint64_t seed = 0;
  Shape shape;
  std::vector<ChannelDist> true_dist;    // size c, or size 1 to broadcast
  std::vector<ChannelDist> learned_dist; // same, or empty to derive
  double mismatch_scale = 1.0;
  double mismatch_mean = 0.0;
};

/// Learned dists per channel after broadcasting and mismatch knobs.
std::vector<ChannelDist> resolve_dists(const SynthSpec& spec);
std::vector<ChannelDist> resolve_true_dists(const SynthSpec& spec);

struct FactorizedSynth {
  LatentTensor tensor;
  std::vector<PmfTable> tables;      // learned prior, one table per channel
  std::vector<ChannelDist> learned;  // resolved learned dists
};

/// Draws from the true dists, rounds half away from zero, and clamps to
/// the learned table support. Deterministic in spec.seed.
FactorizedSynth synthesize_factorized(const SynthSpec& spec, Role role = Role::Main);

struct HyperSynth {
  LatentTensor main;    // symbols are centered: round(y - predicted mean)
  SideInfo side_info;   // channel-constant predicted means and scales
};

/// Main-stream synthesis for the conditional model. The learned dists
/// must be Gaussian; their means become the predicted means that are
/// removed before rounding, their sigmas the predicted scales. Symbols
/// clamp to the assigned scale table's support.
HyperSynth synthesize_hyperprior_main(const SynthSpec& spec, const ScaleTable& scales);

} // namespace egap

#endif
