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

#include "cape/cape_fm.h"

#include "cape/cape_protocol.h"
#include "cape/error.h"

namespace cape {
namespace {

enum StreamTag : std::uint64_t { kDegreeStream = 20 };

struct LocalCoeffs {
  std::vector<QuadraticCoeffs> per_site;
  bool symmetric = true;
};

LocalCoeffs BuildLocal(const std::vector<SiteData>& sites, const LossSpec& spec) {
  if (sites.empty()) throw Error(ErrorCode::kParameter, "no sites");
  LocalCoeffs out;
  for (const SiteData& s : sites) {
    out.per_site.push_back(BuildCoeffs(spec, s.x, s.y));
    if (s.num_samples() != sites.front().num_samples()) out.symmetric = false;
    if (out.per_site.back().dim() != out.per_site.front().dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "sites differ in feature dimension");
    }
  }
  return out;
}

using Aggregator = std::function<AggregateResult(const std::vector<std::vector<double>>&,
                                                 const std::vector<NoiseScale>&, const Rng&,
                                                 const RoundContext&)>;

DistributedFmResult Distribute(const std::vector<SiteData>& sites, const LossSpec& spec,
                               const std::array<NoiseScale, 3>& tau_site,
                               const Participation& participation, const Rng& rng,
                               std::uint64_t round, Provenance provenance,
                               const Aggregator& aggregate) {
  const LocalCoeffs local = BuildLocal(sites, spec);
  const int num_sites = static_cast<int>(sites.size());
  const int dim = local.per_site.front().dim();

  DistributedFmResult result;
  result.symmetric = local.symmetric;
  if (!local.symmetric) result.flags.push_back("utility guarantee void: asymmetric sites");
  result.objective.provenance = provenance;
  result.objective.coeffs = QuadraticCoeffs::Zero(dim);
  std::vector<QuadraticCoeffs> released(num_sites, QuadraticCoeffs::Zero(dim));

  for (int j = 0; j < 3; ++j) {
    std::vector<std::vector<double>> values(num_sites);
    for (int s = 0; s < num_sites; ++s) values[s] = local.per_site[s].Flatten(j);
    const std::vector<NoiseScale> tau(num_sites, tau_site[j]);
    AggregateResult agg;
    if (tau_site[j].tau() == 0.0) {
      // Noise-free degree: plain average of the exact arrays.
      agg.releases.resize(num_sites);
      agg.aggregate.assign(values.front().size(), 0.0);
      int active = 0;
      for (int s = 0; s < num_sites; ++s) {
        if (!participation.active(s)) continue;
        agg.releases[s] = values[s];
        for (std::size_t c = 0; c < values[s].size(); ++c) agg.aggregate[c] += values[s][c];
        ++active;
      }
      for (double& v : agg.aggregate) v /= active;
    } else {
      agg = aggregate(values, tau, rng.Stream({kDegreeStream, static_cast<std::uint64_t>(j)}),
                      RoundContext{round, &result.transcript});
    }
    result.objective.coeffs.Assign(j, agg.aggregate);
    for (int s = 0; s < num_sites; ++s) {
      if (participation.active(s)) released[s].Assign(j, agg.releases[s]);
    }
  }
  for (int s = 0; s < num_sites; ++s) {
    if (participation.active(s)) result.releases.push_back(SiteCoeffRelease{s, round, released[s]});
  }
  return result;
}

}  // namespace

nlohmann::json SiteCoeffRelease::ToJson() const {
  nlohmann::json j;
  j["site"] = site_id;
  j["round"] = round;
  j["coeffs"] = nlohmann::json::array();
  for (int d = 0; d < 3; ++d) j["coeffs"].push_back(coeffs.Degree(d).ToJson());
  return j;
}

DistributedFmResult RunCapeFm(const std::vector<SiteData>& sites, const LossSpec& spec,
                              const std::array<NoiseScale, 3>& tau_site, const Rng& rng,
                              const CapeFmOptions& options) {
  const int num_sites = static_cast<int>(sites.size());
  const Participation participation = options.participation.dropped.empty()
                                          ? Participation::AllActive(num_sites)
                                          : options.participation;
  const int threshold = options.threshold > 0 ? options.threshold : DefaultThreshold(num_sites);
  return Distribute(sites, spec, tau_site, participation, rng, options.round, Provenance::kCapeFm,
                    [&](const auto& values, const auto& tau, const Rng& r, const RoundContext& ctx) {
                      return CapeAggregate(values, tau, participation, threshold, r, ctx);
                    });
}

DistributedFmResult RunConventionalFm(const std::vector<SiteData>& sites, const LossSpec& spec,
                                      const std::array<NoiseScale, 3>& tau_site, const Rng& rng,
                                      std::uint64_t round) {
  const Participation all = Participation::AllActive(static_cast<int>(sites.size()));
  return Distribute(sites, spec, tau_site, all, rng, round, Provenance::kConventionalFm,
                    [&](const auto& values, const auto& tau, const Rng& r, const RoundContext& ctx) {
                      return ConventionalAggregate(values, tau, all, r, ctx);
                    });
}

PerturbedObjective RunLocalFm(const SiteData& site, const LossSpec& spec,
                              const PrivacyBudget& budget, Rng& rng) {
  PerturbedObjective obj = PerturbObjective(BuildCoeffs(spec, site.x, site.y), spec,
                                            site.num_samples(), budget, FmMechanism::kGaussianFm,
                                            rng);
  obj.provenance = Provenance::kLocalFm;
  return obj;
}

}  // namespace cape
