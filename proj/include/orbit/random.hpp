// Copyright 2026 The ORBIT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <string_view>

namespace orbit {

using Rng = std::mt19937_64;

/// 64-bit FNV-1a; stable across platforms, used for feature hashing and stream names.
constexpr std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Named substream of a parent seed. Streams for different names are independent,
/// so adding a consumer never shifts the draws of another.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view name) {
  return splitmix64(parent ^ splitmix64(fnv1a(name)));
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return splitmix64(parent ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Uniform in [0, 1) from the top 53 bits; identical on every standard library.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Inverse-CDF draw from unnormalized non-negative weights.
template <typename Derived>
Eigen::Index sample_categorical(const Derived& probs, Rng& rng) {
  const double total = probs.sum();
  double u = uniform01(rng) * total;
  const Eigen::Index n = probs.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    u -= probs[i];
    if (u < 0.0) return i;
  }
  for (Eigen::Index i = n - 1; i > 0; --i) {
    if (probs[i] > 0.0) return i;
  }
  return 0;
}

}  // namespace orbit
