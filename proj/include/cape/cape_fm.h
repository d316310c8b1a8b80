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

#ifndef CAPE_CAPE_FM_H_
#define CAPE_CAPE_FM_H_

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cape/functional_mechanism.h"
#include "cape/secure_agg.h"
#include "cape/transcript.h"
#include "json.hpp"

namespace cape {

// One site's local samples.
struct SiteData {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;

  int num_samples() const { return static_cast<int>(x.rows()); }
};

// Privatized per-degree coefficient arrays released by one site.
struct SiteCoeffRelease {
  int site_id = 0;
  std::uint64_t round = 0;
  QuadraticCoeffs coeffs;

  nlohmann::json ToJson() const;
};

struct DistributedFmResult {
  PerturbedObjective objective;
  std::vector<SiteCoeffRelease> releases;  // active sites only
  Transcript transcript;
  bool symmetric = true;
  std::vector<std::string> flags;
};

struct CapeFmOptions {
  int threshold = 0;            // 0 selects DefaultThreshold(S)
  Participation participation;  // empty selects all sites active
  std::uint64_t round = 0;
};

// Per-degree CAPE: one zero-sum noise invocation per noised degree over the
// flattened array, local noise tau_j^2 / S, aggregator averages the releases.
// Degrees with tau_j = 0 are released exactly.
DistributedFmResult RunCapeFm(const std::vector<SiteData>& sites, const LossSpec& spec,
                              const std::array<NoiseScale, 3>& tau_site, const Rng& rng,
                              const CapeFmOptions& options = {});

// Every site adds independent N(0, tau_j^2) per entry; the aggregator averages.
DistributedFmResult RunConventionalFm(const std::vector<SiteData>& sites, const LossSpec& spec,
                                      const std::array<NoiseScale, 3>& tau_site, const Rng& rng,
                                      std::uint64_t round = 0);

// Gaussian functional mechanism on a single site's data.
PerturbedObjective RunLocalFm(const SiteData& site, const LossSpec& spec,
                              const PrivacyBudget& budget, Rng& rng);

}  // namespace cape

#endif  // CAPE_CAPE_FM_H_
