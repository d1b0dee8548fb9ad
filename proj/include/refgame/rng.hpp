// Copyright 2026 The refgame Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace refgame {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  static constexpr Counter round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }

  static constexpr Counter apply(Counter c, Key k) {
    for (int i = 0; i < 10; ++i) {
      c = round(c, k);
      k[0] += kW0;
      k[1] += kW1;
    }
    return c;
  }
};

/// Uniform in the open interval (0, 1).
inline double to_unit(std::uint32_t v) { return (static_cast<double>(v) + 0.5) * 0x1p-32; }

inline Philox4x32::Counter make_counter(std::uint64_t index, std::uint64_t path, std::uint32_t stream) {
  return {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), static_cast<std::uint32_t>(path),
          static_cast<std::uint32_t>(path >> 32) ^ (stream << 24)};
}

inline Philox4x32::Key make_key(std::uint64_t seed) {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

/// Standard normal increments of one path: normal(n) is a pure function of
/// (seed, path, n). Each generator call yields four normals (two Box-Muller
/// pairs), cached for sequential access.
class NormalStream {
 public:
  static constexpr std::uint32_t kStream = 0;

  NormalStream(std::uint64_t seed, std::uint64_t path) : key_(make_key(seed)), path_(path) {}

  double normal(std::uint64_t n) {
    const std::uint64_t block = n >> 2;
    if (block != block_) refill(block);
    return cache_[n & 3];
  }

 private:
  void refill(std::uint64_t block) {
    const auto out = Philox4x32::apply(make_counter(block, path_, kStream), key_);
    for (int k = 0; k < 2; ++k) {
      const double rad = std::sqrt(-2.0 * std::log(to_unit(out[2 * k])));
      const double ang = 2.0 * std::numbers::pi * to_unit(out[2 * k + 1]);
      cache_[2 * k] = rad * std::cos(ang);
      cache_[2 * k + 1] = rad * std::sin(ang);
    }
    block_ = block;
  }

  Philox4x32::Key key_;
  std::uint64_t path_;
  std::uint64_t block_ = ~std::uint64_t{0};
  double cache_[4] = {0, 0, 0, 0};
};

/// Two uniforms for the Brownian-bridge extremum draws of fine step n; an
/// independent stream, so they can be drawn only when needed.
struct BridgeUniforms {
  double lo;
  double hi;
};

inline BridgeUniforms bridge_uniforms(std::uint64_t seed, std::uint64_t path, std::uint64_t n) {
  const auto out = Philox4x32::apply(make_counter(n, path, 1), make_key(seed));
  return {to_unit(out[0]), to_unit(out[1])};
}

/// Uniforms for auxiliary per-path draws (stream 2).
inline std::array<double, 4> aux_uniforms(std::uint64_t seed, std::uint64_t path, std::uint64_t n) {
  const auto out = Philox4x32::apply(make_counter(n, path, 2), make_key(seed));
  return {to_unit(out[0]), to_unit(out[1]), to_unit(out[2]), to_unit(out[3])};
}

}  // namespace refgame
