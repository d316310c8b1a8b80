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

#ifndef CAPE_PRIVACY_H_
#define CAPE_PRIVACY_H_

#include <span>
#include <vector>

#include "cape/rng.h"

namespace cape {

// (epsilon, delta) pair. Construction validates epsilon > 0, 0 < delta < 1.
class PrivacyBudget {
 public:
  PrivacyBudget(double epsilon, double delta);

  double epsilon() const { return epsilon_; }
  double delta() const { return delta_; }

 private:
  double epsilon_;
  double delta_;
};

// Standard deviation of additive Gaussian noise.
class NoiseScale {
 public:
  NoiseScale() = default;
  explicit NoiseScale(double tau);

  double tau() const { return tau_; }
  double variance() const { return tau_ * tau_; }

 private:
  double tau_ = 0.0;
};

enum class NormOrder { kL1 = 1, kL2 = 2 };

class Sensitivity {
 public:
  explicit Sensitivity(double value, NormOrder order = NormOrder::kL2);

  double value() const { return value_; }
  NormOrder norm_order() const { return order_; }

 private:
  double value_;
  NormOrder order_;
};

// Mean and variance of the privacy-loss Gaussian z in the CAPE analysis.
// sigma_z_sq == 2 * mu_z holds bit-exactly for values made by CapeMoments().
struct CapeMoments {
  double mu_z = 0.0;
  double sigma_z_sq = 0.0;

  double sigma_z() const;
};

// A delta that may be vacuous (>= 1). `log_delta` is exact even when `delta`
// underflows; `delta` is clamped into (0, 1].
struct DeltaResult {
  double delta = 1.0;
  double log_delta = 0.0;
  bool vacuous = false;
};

// Minimal Gaussian-mechanism scale: (Delta / epsilon) * sqrt(2 ln(1.25/delta)).
// Requires an L2 sensitivity; a zero sensitivity yields tau = 0.
NoiseScale GaussianTau(const Sensitivity& sensitivity, const PrivacyBudget& budget);

// Adds i.i.d. N(0, tau^2) to every element. tau = 0 returns the input exactly.
std::vector<double> GaussianPerturb(std::span<const double> value, NoiseScale tau,
                                    Rng& rng);
void GaussianPerturbInPlace(std::span<double> value, NoiseScale tau, Rng& rng);

// Adds i.i.d. Laplace(0, scale_b) to every element (noise variance 2 b^2).
std::vector<double> LaplacePerturb(std::span<const double> value, double scale_b,
                                   Rng& rng);
void LaplacePerturbInPlace(std::span<double> value, double scale_b, Rng& rng);

// Largest colluder count tolerated by the CAPE guarantee: ceil(S/3) - 1.
int MaxColluders(int num_sites);

// Privacy-loss moments for the symmetric CAPE setting with `num_sites` sites,
// `num_colluders` colluding sites, per-site noise `tau` and `total_samples`
// samples overall. Throws kProtocolAssumption when the collusion bound is
// exceeded.
CapeMoments ComputeCapeMoments(int num_sites, int num_colluders, NoiseScale tau,
                               double total_samples);

// delta = 2 (sigma_z / (eps - mu_z)) phi((eps - mu_z) / sigma_z), evaluated in
// log space once the standardized gap exceeds 30. Throws
// kCalibrationInfeasible when epsilon <= mu_z.
DeltaResult CapeDelta(double epsilon, const CapeMoments& moments);

// Smallest delta the conventional scheme can claim while matching the pooled
// noise variance `tau_pool^2` at the aggregator: each site must use
// sqrt(S) * tau_pool with sensitivity S/N. Vacuous results are flagged.
DeltaResult ConventionalDelta(double epsilon, int num_sites, double total_samples,
                              NoiseScale tau_pool);

}  // namespace cape

#endif  // CAPE_PRIVACY_H_
