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

#include "cape/privacy.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "cape/error.h"

namespace cape {
namespace {

// Beyond this standardized gap phi(x) is assembled from its logarithm.
constexpr double kLogSpaceThreshold = 30.0;

double LogStandardNormalDensity(double x) {
  return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
}

DeltaResult FromLogDelta(double log_delta) {
  DeltaResult result;
  result.log_delta = log_delta;
  if (log_delta >= 0.0) {
    result.delta = 1.0;
    result.vacuous = true;
    return result;
  }
  result.delta = std::exp(log_delta);
  if (result.delta <= 0.0) {
    result.delta = std::numeric_limits<double>::denorm_min();
  }
  return result;
}

}  // namespace

PrivacyBudget::PrivacyBudget(double epsilon, double delta)
    : epsilon_(epsilon), delta_(delta) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorCode::kParameter, "epsilon must be positive and finite");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorCode::kParameter, "delta must lie in (0, 1)");
  }
}

NoiseScale::NoiseScale(double tau) : tau_(tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorCode::kParameter, "noise scale must be finite and >= 0");
  }
}

Sensitivity::Sensitivity(double value, NormOrder order) : value_(value), order_(order) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCode::kParameter, "sensitivity must be finite and >= 0");
  }
}

double CapeMoments::sigma_z() const { return std::sqrt(sigma_z_sq); }

NoiseScale GaussianTau(const Sensitivity& sensitivity, const PrivacyBudget& budget) {
  if (sensitivity.norm_order() != NormOrder::kL2) {
    throw Error(ErrorCode::kParameter, "Gaussian mechanism needs an L2 sensitivity");
  }
  return NoiseScale(sensitivity.value() / budget.epsilon() *
                    std::sqrt(2.0 * std::log(1.25 / budget.delta())));
}

void GaussianPerturbInPlace(std::span<double> value, NoiseScale tau, Rng& rng) {
  if (tau.tau() == 0.0) return;
  for (double& v : value) v += tau.tau() * rng.Normal();
}

std::vector<double> GaussianPerturb(std::span<const double> value, NoiseScale tau,
                                    Rng& rng) {
  std::vector<double> out(value.begin(), value.end());
  GaussianPerturbInPlace(out, tau, rng);
  return out;
}

void LaplacePerturbInPlace(std::span<double> value, double scale_b, Rng& rng) {
  if (!(scale_b > 0.0)) {
    throw Error(ErrorCode::kParameter, "Laplace scale must be positive");
  }
  for (double& v : value) v += rng.Laplace(scale_b);
}

std::vector<double> LaplacePerturb(std::span<const double> value, double scale_b,
                                   Rng& rng) {
  std::vector<double> out(value.begin(), value.end());
  LaplacePerturbInPlace(out, scale_b, rng);
  return out;
}

int MaxColluders(int num_sites) { return (num_sites + 2) / 3 - 1; }

CapeMoments ComputeCapeMoments(int num_sites, int num_colluders, NoiseScale tau,
                               double total_samples) {
  if (num_sites < 3) {
    throw Error(ErrorCode::kParameter, "CAPE calibration needs at least 3 sites");
  }
  if (num_colluders < 0 || num_colluders > MaxColluders(num_sites)) {
    std::ostringstream msg;
    msg << num_colluders << " colluders exceed ceil(S/3)-1 = "
        << MaxColluders(num_sites) << " for S = " << num_sites;
    throw Error(ErrorCode::kProtocolAssumption, msg.str());
  }
  if (!(tau.tau() > 0.0)) {
    throw Error(ErrorCode::kParameter, "CAPE calibration needs tau > 0");
  }
  if (!(total_samples >= num_sites)) {
    throw Error(ErrorCode::kParameter, "total sample count must be >= S");
  }

  const double s = num_sites;
  const double sc = num_colluders;
  const double honest = s - sc;
  // The second summand vanishes for S_C = 0.
  const double bracket =
      (honest + 2.0) / honest + ((9.0 / honest) * sc * sc) / (s * (1.0 + s) - 3.0 * sc * sc);
  const double base = (s * s * s) / (tau.variance() * total_samples * total_samples * (1.0 + s));

  CapeMoments m;
  m.sigma_z_sq = base * bracket;
  m.mu_z = (base / 2.0) * bracket;
  return m;
}

DeltaResult CapeDelta(double epsilon, const CapeMoments& moments) {
  if (!(epsilon > moments.mu_z)) {
    std::ostringstream msg;
    msg << "epsilon = " << epsilon << " must exceed mu_z = " << moments.mu_z
        << " (minimum feasible epsilon)";
    throw Error(ErrorCode::kCalibrationInfeasible, msg.str());
  }
  const double sigma = moments.sigma_z();
  const double x = (epsilon - moments.mu_z) / sigma;
  if (x > kLogSpaceThreshold) {
    return FromLogDelta(std::log(2.0) - std::log(x) + LogStandardNormalDensity(x));
  }
  const double phi = std::exp(LogStandardNormalDensity(x));
  const double delta = 2.0 * phi / x;
  if (delta >= 1.0) return FromLogDelta(std::log(delta));
  DeltaResult result;
  result.delta = delta;
  result.log_delta = std::log(delta);
  return result;
}

DeltaResult ConventionalDelta(double epsilon, int num_sites, double total_samples,
                              NoiseScale tau_pool) {
  if (!(epsilon > 0.0) || num_sites < 1 || !(total_samples > 0.0)) {
    throw Error(ErrorCode::kParameter, "conventional delta needs positive inputs");
  }
  const double s = num_sites;
  const double tau_site = std::sqrt(s) * tau_pool.tau();
  const double g = tau_site * epsilon * total_samples / s;
  return FromLogDelta(std::log(1.25) - 0.5 * g * g);
}

}  // namespace cape
