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

#ifndef CAPE_RNG_H_
#define CAPE_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace cape {

// Counter-based generator: output i of a stream is a bijective mix of
// (key + i * golden_gamma), so any stream can be re-derived from the master
// seed and a path of stream ids (party, round, ...). Satisfies
// UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : key_(Mix(seed ^ kSeedSalt)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    ++counter_;
    return Mix(key_ + counter_ * kGamma);
  }

  // Independent child stream keyed by this stream's key and `ids`. Does not
  // advance this stream.
  Rng Stream(std::initializer_list<std::uint64_t> ids) const;
  Rng Stream(std::uint64_t id) const { return Stream({id}); }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform01();
  // Uniform on (0, 1).
  double UniformOpen01();
  // Uniform integer in [0, bound); bound > 0.
  std::uint64_t UniformBelow(std::uint64_t bound);
  // Standard normal via Box-Muller; the second variate is cached.
  double Normal();
  double Normal(double mean, double sd) { return mean + sd * Normal(); }
  // Laplace(0, b).
  double Laplace(double scale);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  static std::uint64_t Mix(std::uint64_t z);

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kSeedSalt = 0xD1B54A32D192ED03ULL;

  struct FromKey {};
  Rng(FromKey, std::uint64_t key) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace cape

#endif  // CAPE_RNG_H_
