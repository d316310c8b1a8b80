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

#include "cape/cape_protocol.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "cape/error.h"

namespace cape {
namespace {

enum StreamTag : std::uint64_t { kZeroSumStream = 10, kLocalNoiseStream = 11, kCostStream = 12 };

void CheckShapes(const std::vector<std::vector<double>>& local_values,
                 const std::vector<NoiseScale>& tau_per_site, const Participation& participation) {
  if (local_values.empty()) throw Error(ErrorCode::kParameter, "no sites");
  if (tau_per_site.size() != local_values.size() ||
      participation.num_sites() != static_cast<int>(local_values.size())) {
    throw Error(ErrorCode::kParameter, "site count mismatch");
  }
  const std::size_t dim = local_values.front().size();
  for (const auto& v : local_values) {
    if (v.size() != dim) throw Error(ErrorCode::kDimensionMismatch, "local values differ in length");
  }
}

void SendRelease(const RoundContext& ctx, int site, const std::vector<double>& release) {
  if (ctx.transcript == nullptr) return;
  Message m;
  m.round = ctx.round;
  m.from = site;
  m.to = kAggregator;
  m.kind = MessageKind::kRelease;
  m.real_payload = release;
  m.scalar_count = static_cast<std::int64_t>(release.size());
  ctx.transcript->Append(std::move(m));
}

// Aggregator side: averages whatever releases arrived.
std::vector<double> AverageReleases(const std::vector<std::vector<double>>& releases,
                                    std::size_t dim, int* num_active) {
  std::vector<double> sum(dim, 0.0);
  int count = 0;
  for (const auto& r : releases) {
    if (r.empty() && dim > 0) continue;
    for (std::size_t c = 0; c < dim; ++c) sum[c] += r[c];
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::kDropoutThreshold, "no active sites");
  for (double& v : sum) v /= count;
  *num_active = count;
  return sum;
}

struct Prepared {
  std::vector<std::vector<double>> values;
  std::vector<NoiseScale> tau;
  bool symmetric = true;
};

Prepared Evaluate(const std::vector<SiteView>& sites, const LocalFunction& f) {
  if (sites.empty()) throw Error(ErrorCode::kParameter, "no sites");
  Prepared p;
  for (const SiteView& site : sites) {
    p.values.push_back(f(site).value);
    p.tau.push_back(site.tau);
    if (site.local_data.size() != sites.front().local_data.size() ||
        site.tau.tau() != sites.front().tau.tau()) {
      p.symmetric = false;
    }
  }
  return p;
}

}  // namespace

LocalEstimate LocalFunctionAverage(const SiteView& view) {
  if (view.local_data.empty()) {
    throw Error(ErrorCode::kData, "site " + std::to_string(view.site_id) + " has no samples");
  }
  double sum = 0.0;
  for (double x : view.local_data) {
    if (!(x >= 0.0 && x <= 1.0)) {
      throw Error(ErrorCode::kBoundViolation, "sample outside [0, 1]");
    }
    sum += x;
  }
  const double n = static_cast<double>(view.local_data.size());
  return LocalEstimate{{sum / n}, Sensitivity(1.0 / n)};
}

AggregatorView::AggregatorView(const Transcript& transcript)
    : messages_(transcript.AggregatorMessages()) {}

std::vector<std::vector<double>> AggregatorView::Releases(int num_sites) const {
  std::vector<std::vector<double>> out(num_sites);
  for (const Message& m : messages_) {
    if (m.kind == MessageKind::kRelease && m.from >= 0 && m.from < num_sites) {
      out[m.from] = m.real_payload;
    }
  }
  return out;
}

AggregateResult CapeAggregate(const std::vector<std::vector<double>>& local_values,
                              const std::vector<NoiseScale>& tau_per_site,
                              const Participation& participation, int threshold,
                              const Rng& rng, const RoundContext& ctx) {
  CheckShapes(local_values, tau_per_site, participation);
  const int num_sites = static_cast<int>(local_values.size());
  const std::size_t dim = local_values.front().size();
  if (num_sites < 2) throw Error(ErrorCode::kParameter, "CAPE needs at least 2 sites");

  const ZeroSumNoise zero_sum = GenerateZeroSumNoise(
      tau_per_site, dim, threshold, participation, rng.Stream(kZeroSumStream), ctx);

  AggregateResult result;
  result.releases.resize(num_sites);
  result.e_hat = zero_sum.e_hat;
  result.e = zero_sum.e;
  for (int s = 0; s < num_sites; ++s) {
    if (!participation.active(s)) continue;
    // tau_g^2 = tau_s^2 / S.
    const NoiseScale tau_g(tau_per_site[s].tau() / std::sqrt(static_cast<double>(num_sites)));
    Rng local = rng.Stream({kLocalNoiseStream, static_cast<std::uint64_t>(s)});
    std::vector<double> release(dim);
    for (std::size_t c = 0; c < dim; ++c) release[c] = local_values[s][c] + zero_sum.e[s][c];
    GaussianPerturbInPlace(release, tau_g, local);
    SendRelease(ctx, s, release);
    result.releases[s] = std::move(release);
  }
  result.aggregate = AverageReleases(result.releases, dim, &result.num_active);
  if (dim == 0) result.num_active = participation.num_active();
  return result;
}

AggregateResult ConventionalAggregate(const std::vector<std::vector<double>>& local_values,
                                      const std::vector<NoiseScale>& tau_per_site,
                                      const Participation& participation, const Rng& rng,
                                      const RoundContext& ctx) {
  CheckShapes(local_values, tau_per_site, participation);
  const int num_sites = static_cast<int>(local_values.size());
  const std::size_t dim = local_values.front().size();
  AggregateResult result;
  result.releases.resize(num_sites);
  for (int s = 0; s < num_sites; ++s) {
    if (!participation.active(s)) continue;
    Rng local = rng.Stream({kLocalNoiseStream, static_cast<std::uint64_t>(s)});
    std::vector<double> release = GaussianPerturb(local_values[s], tau_per_site[s], local);
    SendRelease(ctx, s, release);
    result.releases[s] = std::move(release);
  }
  result.aggregate = AverageReleases(result.releases, dim, &result.num_active);
  if (dim == 0) result.num_active = participation.num_active();
  return result;
}

RoundResult RunCapeRound(const std::vector<SiteView>& sites, const LocalFunction& f,
                         const Rng& rng, const CapeRoundOptions& options) {
  const Prepared p = Evaluate(sites, f);
  const int num_sites = static_cast<int>(sites.size());
  const Participation participation = options.participation.dropped.empty()
                                          ? Participation::AllActive(num_sites)
                                          : options.participation;
  const int threshold = options.threshold > 0 ? options.threshold : DefaultThreshold(num_sites);

  RoundResult result;
  result.symmetric = p.symmetric;
  if (!p.symmetric) result.flags.push_back("utility guarantee void: asymmetric sites");
  if (!options.collusion.WithinBound(num_sites)) {
    std::ostringstream msg;
    msg << "collusion bound exceeded: " << options.collusion.size() << " > "
        << MaxColluders(num_sites) << "; privacy not certified";
    result.flags.push_back(msg.str());
    result.privacy_certified = false;
  }
  result.detail = CapeAggregate(p.values, p.tau, participation, threshold, rng,
                                RoundContext{options.round, &result.transcript});
  result.estimate = result.detail.aggregate.at(0);
  return result;
}

RoundResult RunConventionalRound(const std::vector<SiteView>& sites, const LocalFunction& f,
                                 const Rng& rng, std::uint64_t round) {
  const Prepared p = Evaluate(sites, f);
  RoundResult result;
  result.symmetric = p.symmetric;
  result.detail = ConventionalAggregate(p.values, p.tau,
                                        Participation::AllActive(static_cast<int>(sites.size())),
                                        rng, RoundContext{round, &result.transcript});
  result.estimate = result.detail.aggregate.at(0);
  return result;
}

double RunPooled(const std::vector<double>& all_data, NoiseScale tau_pool, Rng& rng) {
  const LocalEstimate mean = LocalFunctionAverage(SiteView{0, all_data, tau_pool});
  return mean.value[0] + tau_pool.tau() * rng.Normal();
}

double RunPooled(const std::vector<double>& all_data, const PrivacyBudget& budget, Rng& rng) {
  if (all_data.empty()) throw Error(ErrorCode::kData, "no samples");
  const NoiseScale tau =
      GaussianTau(Sensitivity(1.0 / static_cast<double>(all_data.size())), budget);
  return RunPooled(all_data, tau, rng);
}

double HRatio(const std::vector<double>& samples_per_site, const SensitivityFn& sensitivity) {
  if (samples_per_site.empty()) throw Error(ErrorCode::kParameter, "no sites");
  double total = 0.0;
  double sum_sq = 0.0;
  for (double n : samples_per_site) {
    if (!(n >= 1.0)) throw Error(ErrorCode::kParameter, "every site needs N_s >= 1");
    total += n;
    const double d = sensitivity(n);
    sum_sq += d * d;
  }
  const double s = static_cast<double>(samples_per_site.size());
  const double d_total = sensitivity(total);
  return sum_sq / (s * s * s * d_total * d_total);
}

double HRatioUpperBound(double total_samples, int num_sites) {
  const double s = num_sites;
  const double big = total_samples - s + 1.0;
  return total_samples * total_samples / (s * s * s) * (1.0 / (big * big) + s - 1.0);
}

SensitivityConditionReport CheckSensitivityCondition(const SensitivityFn& sensitivity,
                                                     double total_samples, int num_sites,
                                                     double rel_tol) {
  const double s = num_sites;
  SensitivityConditionReport r;
  r.delta_at_share = sensitivity(total_samples / s);
  r.scaled_delta = s * sensitivity(total_samples);
  const auto close = [rel_tol](double a, double b) {
    return std::abs(a - b) <= rel_tol * std::max(std::abs(a), std::abs(b));
  };
  r.convex_condition = close(r.delta_at_share, r.scaled_delta);
  const double lhs = s * s * s * sensitivity(total_samples) * sensitivity(total_samples);
  const double rhs = s * r.delta_at_share * r.delta_at_share;
  r.general_condition = close(lhs, rhs);
  r.h_symmetric = HRatio(std::vector<double>(num_sites, total_samples / s), sensitivity);
  if (r.general_condition) {
    r.message = "H = 1 at the equal split: CAPE matches the pooled variance";
  } else if (r.h_symmetric < 1.0) {
    r.message = "CAPE exceeds pooled variance parity (H < 1)";
  } else {
    r.message = "CAPE falls short of pooled variance parity (H > 1)";
  }
  return r;
}

CostReport CommunicationCost(int num_sites, int dim, Protocol protocol, std::uint64_t seed) {
  if (num_sites < 2 || dim < 0) throw Error(ErrorCode::kParameter, "need S >= 2 and D >= 0");
  Rng rng(seed);
  Rng data_rng = rng.Stream(kCostStream);
  std::vector<std::vector<double>> values(num_sites, std::vector<double>(dim));
  for (auto& v : values) {
    for (double& x : v) x = data_rng.Uniform01();
  }
  const std::vector<NoiseScale> tau(num_sites, NoiseScale(0.1));
  Transcript transcript;
  const RoundContext ctx{0, &transcript};
  const Participation all = Participation::AllActive(num_sites);
  if (protocol == Protocol::kCape) {
    CapeAggregate(values, tau, all, DefaultThreshold(num_sites), rng, ctx);
  } else {
    ConventionalAggregate(values, tau, all, rng, ctx);
  }
  return transcript.Cost(num_sites);
}

AffineCostFit FitAffineCost(const std::vector<int>& sites, const std::vector<int>& dims,
                            const std::vector<double>& cost) {
  const auto n = static_cast<Eigen::Index>(cost.size());
  if (n < 3 || sites.size() != cost.size() || dims.size() != cost.size()) {
    throw Error(ErrorCode::kParameter, "affine fit needs >= 3 matching points");
  }
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = sites[i];
    a(i, 2) = dims[i];
    y(i) = cost[i];
  }
  const Eigen::Vector3d c = a.colPivHouseholderQr().solve(y);
  const double ss_res = (a * c - y).squaredNorm();
  const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
  AffineCostFit fit;
  fit.intercept = c(0);
  fit.per_site = c(1);
  fit.per_dim = c(2);
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

}  // namespace cape
