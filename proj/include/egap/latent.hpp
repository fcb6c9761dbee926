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

#ifndef EGAP_LATENT_HPP
#define EGAP_LATENT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "egap/error.hpp"

namespace egap {

struct Shape {
  uint32_t h = 0, w = 0, c = 0;
  uint64_t volume() const { return uint64_t(h) * w * c; }
  bool operator==(const Shape&) const = default;
};

enum class Role : uint8_t { Main = 0, Side = 1 };

/// Quantized latents, row-major with the channel as the fastest axis.
/// Symbols are the integers the entropy coder sees: rounding offsets
/// (predicted means) have already been removed upstream.
struct LatentTensor {
  Shape shape;
  Role role = Role::Main;
  std::vector<int32_t> symbols;

  uint32_t channel_of(size_t index) const { return static_cast<uint32_t>(index % shape.c); }
};

/// Per-symbol conditional Gaussian parameters predicted from the side
/// stream. Means are kept for provenance; coding consumes the scales.
struct SideInfo {
  std::vector<float> means;
  std::vector<float> scales;
};

struct LatentFile {
  LatentTensor tensor;
  std::optional<SideInfo> side;
};

void save_latents(const LatentTensor& tensor, const SideInfo* side,
                  const std::filesystem::path& path);
LatentFile load_latents(const std::filesystem::path& path);

std::vector<uint8_t> serialize_latents(const LatentTensor& tensor, const SideInfo* side);
LatentFile parse_latents(std::span<const uint8_t> bytes);

} // namespace egap

#endif
