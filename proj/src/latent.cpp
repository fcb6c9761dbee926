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

#include "egap/latent.hpp"

#include <fstream>

#include "egap/bits.hpp"

namespace egap {

namespace {

constexpr uint16_t kLatentVersion = 1;

void check_tensor(const LatentTensor& tensor, const SideInfo* side) {
  if (tensor.shape.volume() == 0) throw ConfigError("latents: empty shape");
  if (tensor.symbols.size() != tensor.shape.volume())
    throw ConfigError("latents: symbol count " + std::to_string(tensor.symbols.size()) +
                      " does not match shape volume " + std::to_string(tensor.shape.volume()));
  if (side) {
    if (side->means.size() != tensor.symbols.size() ||
        side->scales.size() != tensor.symbols.size())
      throw ConfigError("latents: side-info length does not match shape volume");
    for (size_t i = 0; i < side->scales.size(); ++i)
      if (!(side->scales[i] > 0.0f))
        throw ConfigError("latents: non-positive scale at entry " + std::to_string(i));
  }
}

} // namespace

std::vector<uint8_t> serialize_latents(const LatentTensor& tensor, const SideInfo* side) {
  check_tensor(tensor, side);
  ByteWriter w;
  w.tag("LATB");
  w.u16(kLatentVersion);
  w.u8(static_cast<uint8_t>(tensor.role));
  w.u8(0); // reserved
  w.u32(tensor.shape.h);
  w.u32(tensor.shape.w);
  w.u32(tensor.shape.c);
  for (int32_t s : tensor.symbols) w.i32(s);
  if (side) {
    w.tag("SIDE");
    w.u64(side->means.size());
    for (float m : side->means) w.f32(m);
    for (float s : side->scales) w.f32(s);
  }
  return w.take();
}

LatentFile parse_latents(std::span<const uint8_t> bytes) {
  ByteReader r(bytes, "LATB header");
  if (!r.tag_matches("LATB"))
    throw ParseError("LATB header: bad magic at offset 0");
  uint16_t version = r.u16();
  if (version != kLatentVersion)
    throw ParseError("LATB header: unsupported version " + std::to_string(version) +
                     " at offset 4");
  uint8_t role = r.u8();
  if (role > 1)
    throw ParseError("LATB header: bad role tag " + std::to_string(role) + " at offset 6");
  r.u8(); // reserved
  LatentFile out;
  out.tensor.role = static_cast<Role>(role);
  out.tensor.shape.h = r.u32();
  out.tensor.shape.w = r.u32();
  out.tensor.shape.c = r.u32();
  uint64_t volume = out.tensor.shape.volume();
  if (volume == 0) throw ParseError("LATB header: empty shape at offset 8");
  if (volume > (uint64_t(1) << 32))
    throw ParseError("LATB header: implausible shape volume at offset 8");

  r.set_chunk("LATB symbols");
  out.tensor.symbols.resize(volume);
  for (uint64_t i = 0; i < volume; ++i) out.tensor.symbols[i] = r.i32();

  if (r.remaining() > 0) {
    size_t side_at = r.offset();
    r.set_chunk("SIDE chunk");
    if (!r.tag_matches("SIDE"))
      throw ParseError("SIDE chunk: bad magic at offset " + std::to_string(side_at));
    uint64_t count = r.u64();
    if (count != volume)
      throw ParseError("SIDE chunk: side-info length " + std::to_string(count) +
                       " does not match shape volume " + std::to_string(volume) +
                       " (offset " + std::to_string(side_at + 4) + ")");
    SideInfo side;
    side.means.resize(count);
    side.scales.resize(count);
    for (uint64_t i = 0; i < count; ++i) side.means[i] = r.f32();
    for (uint64_t i = 0; i < count; ++i) {
      size_t at = r.offset();
      side.scales[i] = r.f32();
      if (!(side.scales[i] > 0.0f))
        throw ParseError("SIDE chunk: non-positive scale at entry " + std::to_string(i) +
                         " (offset " + std::to_string(at) + ")");
    }
    out.side = std::move(side);
  }
  r.expect_end();
  return out;
}

void save_latents(const LatentTensor& tensor, const SideInfo* side,
                  const std::filesystem::path& path) {
  auto bytes = serialize_latents(tensor, side);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

LatentFile load_latents(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw IoError("cannot open " + path.string());
  std::streamsize n = f.tellg();
  f.seekg(0);
  std::vector<uint8_t> bytes(static_cast<size_t>(n));
  f.read(reinterpret_cast<char*>(bytes.data()), n);
  if (!f) throw IoError("read failed for " + path.string());
  return parse_latents(bytes);
}

} // namespace egap
