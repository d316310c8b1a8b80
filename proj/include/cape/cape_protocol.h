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

#ifndef CAPE_CAPE_PROTOCOL_H_
#define CAPE_CAPE_PROTOCOL_H_

#include <functional>
#include <string>
#include <vector>

#include "cape/privacy.h"
#include "cape/rng.h"
#include "cape/secure_agg.h"
#include "cape/transcript.h"

namespace cape {

// State private to one site. Only the site's own code path reads it.
struct SiteView {
  int site_id = 0;
  std::vector<double> local_data;  // samples in [0, 1] for scalar averaging
  NoiseScale tau;
};

// A local function value together with its L2 sensitivity.
struct LocalEstimate {
  std::vector<double> value;
  Sensitivity sensitivity{0.0};
};

using LocalFunction = std::function<LocalEstimate(const SiteView&)>;

// Mean of the site's samples, sensitivity 1/N_s. Throws kData on an empty
// site and kBoundViolation on samples outside [0, 1].
LocalEstimate LocalFunctionAverage(const SiteView& view);

// Sites whose observations the adversary pools with the aggregator's.
struct CollusionModel {
  std::vector<int> colluding_sites;

  int size() const { return static_cast<int>(colluding_sites.size()); }
  bool WithinBound(int num_sites) const { return size() <= MaxColluders(num_sites); }
};

// What the aggregator observes: messages it sent or received, nothing else.
class AggregatorView {
 public:
  explicit AggregatorView(const Transcript& transcript);

  const std::vector<Message>& messages() const { return messages_; }
  // Released vectors by site id (empty for sites that sent none).
  std::vector<std::vector<double>> Releases(int num_sites) const;

 private:
  std::vector<Message> messages_;
};

// Aggregation of per-site vectors.
struct AggregateResult {
  std::vector<double> aggregate;                // mean over active sites
  std::vector<std::vector<double>> releases;    // per site; empty if dropped
  int num_active = 0;
  // Simulator internals, never part of any party's view. Empty for the
  // conventional scheme.
  std::vector<std::vector<double>> e_hat;
  std::vector<std::vector<double>> e;
};

// CAPE release of already-computed local vectors: zero-sum noise e_s from
// secure aggregation plus local noise g_s ~ N(0, tau_s^2 / S); the aggregator
// averages the releases of the active sites.
AggregateResult CapeAggregate(const std::vector<std::vector<double>>& local_values,
                              const std::vector<NoiseScale>& tau_per_site,
                              const Participation& participation, int threshold,
                              const Rng& rng, const RoundContext& ctx = {});

// Each site adds independent N(0, tau_s^2) noise; the aggregator averages.
AggregateResult ConventionalAggregate(const std::vector<std::vector<double>>& local_values,
                                      const std::vector<NoiseScale>& tau_per_site,
                                      const Participation& participation, const Rng& rng,
                                      const RoundContext& ctx = {});

struct CapeRoundOptions {
  int threshold = 0;            // 0 selects DefaultThreshold(S)
  Participation participation;  // empty selects all sites active
  CollusionModel collusion;
  std::uint64_t round = 0;
};

struct RoundResult {
  double estimate = 0.0;
  AggregateResult detail;
  Transcript transcript;
  bool privacy_certified = true;
  bool symmetric = true;
  std::vector<std::string> flags;
};

// One CAPE estimation round over scalar local functions. Runs even when the
// collusion bound is exceeded or the sites are asymmetric; both are reported
// in `flags` and clear `privacy_certified` / `symmetric`.
RoundResult RunCapeRound(const std::vector<SiteView>& sites, const LocalFunction& f,
                         const Rng& rng, const CapeRoundOptions& options = {});

RoundResult RunConventionalRound(const std::vector<SiteView>& sites, const LocalFunction& f,
                                 const Rng& rng, std::uint64_t round = 0);

// Single Gaussian release of the pooled mean, tau_pool = GaussianTau at
// sensitivity 1/N.
double RunPooled(const std::vector<double>& all_data, const PrivacyBudget& budget, Rng& rng);
double RunPooled(const std::vector<double>& all_data, NoiseScale tau_pool, Rng& rng);

using SensitivityFn = std::function<double(double)>;

// H(n) = sum_s Delta(N_s)^2 / (S^3 Delta(N)^2).
double HRatio(const std::vector<double>& samples_per_site, const SensitivityFn& sensitivity);
// Upper bound (N^2 / S^3)(1/(N - S + 1)^2 + S - 1) for Delta(N) = 1/N.
double HRatioUpperBound(double total_samples, int num_sites);

struct SensitivityConditionReport {
  double delta_at_share = 0.0;    // Delta(N/S)
  double scaled_delta = 0.0;      // S * Delta(N)
  bool convex_condition = false;  // Delta(N/S) = S Delta(N)
  bool general_condition = false; // S^3 Delta(N)^2 = sum_s Delta(N/S)^2
  double h_symmetric = 0.0;       // H at the equal split
  std::string message;
};

SensitivityConditionReport CheckSensitivityCondition(const SensitivityFn& sensitivity,
                                                     double total_samples, int num_sites,
                                                     double rel_tol = 1e-12);

enum class Protocol { kCape, kConventional };

// Runs one simulated round of `protocol` with S sites and D-dimensional
// values and counts the scalars on the wire.
CostReport CommunicationCost(int num_sites, int dim, Protocol protocol, std::uint64_t seed = 0);

// Least-squares fit y ~ c0 + c1 * S + c2 * D.
struct AffineCostFit {
  double intercept = 0.0;
  double per_site = 0.0;
  double per_dim = 0.0;
  double r_squared = 0.0;
};
AffineCostFit FitAffineCost(const std::vector<int>& sites, const std::vector<int>& dims,
                            const std::vector<double>& cost);

}  // namespace cape

#endif  // CAPE_CAPE_PROTOCOL_H_
