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

#ifndef CAPE_SECURE_AGG_H_
#define CAPE_SECURE_AGG_H_

#include <cstdint>
#include <vector>

#include "cape/field.h"
#include "cape/privacy.h"
#include "cape/rng.h"
#include "cape/transcript.h"

namespace cape {

// Default Shamir threshold floor(2S/3) + 1: a coalition of at most
// ceil(S/3) - 1 sites cannot reconstruct.
int DefaultThreshold(int num_sites);

// Which sites take part in a round. Dropped sites register keys but deliver
// no input and receive no broadcast for that round.
struct Participation {
  std::vector<bool> dropped;

  static Participation AllActive(int num_sites) {
    return Participation{std::vector<bool>(num_sites, false)};
  }
  int num_sites() const { return static_cast<int>(dropped.size()); }
  int num_active() const;
  bool active(int site) const { return !dropped[site]; }
};

// Round context shared by the simulated protocol steps.
struct RoundContext {
  std::uint64_t round = 0;
  Transcript* transcript = nullptr;  // optional
};

// Field sum of the active sites' vectors. Simulated secure aggregation:
// every site registers a key-agreement value, Shamir-shares its key secret
// (threshold t) with the other sites, and uploads its input masked by
// pairwise pseudo-random vectors that cancel in the sum. The masks of
// dropped sites are removed after reconstructing their secrets from the
// shares of >= t active sites. The aggregator only handles masked vectors.
// Party randomness is derived from `rng` by stream id; `rng` is not advanced.
// Throws kDropoutThreshold when fewer than t sites are active.
FieldVector SecureSum(const PrimeField& field, const std::vector<FieldVector>& per_site_values,
                      int threshold, const Participation& participation, const Rng& rng,
                      const RoundContext& ctx = {});

// Per-site output of the zero-sum noise generation.
struct ZeroSumNoise {
  // e_s per site (empty for dropped sites).
  std::vector<std::vector<double>> e;
  // e-hat_s as actually used (quantized), per site.
  std::vector<std::vector<double>> e_hat;
  // e_s on the field grid in units of 1 / (S_active * scale); sums to zero.
  std::vector<FieldVector> e_field;
  // Remapped sum of the active e-hat values broadcast by the aggregator.
  std::vector<double> broadcast_sum;
  QuantizationSpec spec;
  int num_active = 0;
};

// Zero-sum noise across sites: each site draws e-hat_s ~ N(0, tau_s^2) per
// coordinate, the aggregator securely sums the quantized values and
// broadcasts the remapped total, and each site sets
// e_s = e-hat_s - total / S_active.
ZeroSumNoise GenerateZeroSumNoise(const std::vector<NoiseScale>& tau_per_site, std::size_t dim,
                                  int threshold, const Participation& participation, const Rng& rng,
                                  const RoundContext& ctx = {},
                                  const PrimeField& field = PrimeField());

}  // namespace cape

#endif  // CAPE_SECURE_AGG_H_
