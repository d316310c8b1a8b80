//
// Copyright 2026 The CAPE-DP Authors
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
//

#include "cape/rng.h"

#include <cmath>
#include <numbers>

namespace cape {

std::uint64_t Rng::Mix(std::uint64_t z) {
  // SplitMix64 finalizer.
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng Rng::Stream(std::initializer_list<std::uint64_t> ids) const {
  std::uint64_t k = Mix(key_ ^ 0x6A09E667F3BCC909ULL);
  for (std::uint64_t id : ids) {
    k = Mix(k + kGamma * (id + 1));
  }
  return Rng(FromKey{}, k);
}

double Rng::Uniform01() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double Rng::UniformOpen01() {
  return (static_cast<double>((*this)() >> 12) + 0.5) * 0x1.0p-52;
}

std::uint64_t Rng::UniformBelow(std::uint64_t bound) {
  // Lemire's nearly-divisionless method.
  unsigned __int128 m =
      static_cast<unsigned __int128>((*this)()) * static_cast<unsigned __int128>(bound);
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>((*this)()) * static_cast<unsigned __int128>(bound);
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Rng::Normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = UniformOpen01();
  const double u2 = Uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

double Rng::Laplace(double scale) {
  const double u = UniformOpen01() - 0.5;
  return -scale * std::copysign(1.0, u) * std::log1p(-2.0 * std::abs(u));
}

}  // namespace cape
