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

#ifndef EGAP_CLI_HPP
#define EGAP_CLI_HPP

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "egap/latent.hpp"
#include "egap/synth.hpp"

namespace egap {

/// Runs the egap tool on already-split arguments (no program name).
/// Returns the process exit code; all output goes to the given streams,
/// which keeps the whole front end testable in-process.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

/// Distribution descriptor, e.g. "gauss:1.3", "gauss:0.5,2", "laplace:1",
/// "mix2:-3,0.5,3,0.5,0.5". A sigma or mean field may be a per-channel
/// spread "A..B" (geometric for sigma, linear for mean); any spread makes
/// the result one entry per channel, otherwise a single broadcast entry.
std::vector<ChannelDist> parse_dists(const std::string& text, uint32_t channels);

/// "HxWxC" with positive decimal fields.
Shape parse_shape(const std::string& text);

} // namespace egap

#endif
