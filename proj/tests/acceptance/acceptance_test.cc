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

// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cape/cape_fm.h"
#include "cape/cape_protocol.h"
#include "cape/dataset.h"
#include "cape/error.h"
#include "cape/experiment.h"
#include "cape/field.h"
#include "cape/functional_mechanism.h"
#include "cape/nn.h"
#include "cape/privacy.h"
#include "cape/secure_agg.h"
#include "cape/solvers.h"

namespace cape {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

double Variance(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0.0;
  for (double a : v) ss += (a - mean) * (a - mean);
  return ss / (v.size() - 1.0);
}

// Unit-ball sample: random direction, radius uniform in [0, 1].
Eigen::VectorXd BallPoint(int dim, Rng& rng) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.Normal();
  return v / v.norm() * rng.Uniform01();
}

std::vector<std::vector<double>> ScalarSites(int s) {
  std::vector<std::vector<double>> v(s);
  for (int i = 0; i < s; ++i) v[i] = {0.1 * (i + 1)};
  return v;
}

Outcome PooledVarianceEquality() {
  const auto start = std::chrono::steady_clock::now();
  const int s = 4, n = 4000, rounds = 10000;
  const NoiseScale tau = GaussianTau(Sensitivity(1.0 / (n / s)), PrivacyBudget(1.0, 0.01));
  const std::vector<NoiseScale> taus(s, tau);
  const auto local = ScalarSites(s);
  const Participation all = Participation::AllActive(s);
  const Rng rng(101);
  std::vector<double> agg(rounds);
  for (int r = 0; r < rounds; ++r) {
    agg[r] = CapeAggregate(local, taus, all, DefaultThreshold(s), rng.Stream(r)).aggregate[0];
  }
  const double target = tau.variance() / (s * s);
  const double rel = std::abs(Variance(agg) / target - 1.0);
  const double secs = Seconds(start);
  std::ostringstream d;
  d << "var ratio to tau^2/S^2 off by " << 100 * rel << "%, " << secs << " s";
  return {rel <= 0.03 && secs < 30.0, d.str()};
}

Outcome GainEqualsS() {
  bool pass = true;
  std::ostringstream d;
  for (int s : {3, 5, 10}) {
    const int rounds = 10000;
    const std::vector<NoiseScale> taus(s, NoiseScale(0.2));
    const auto local = ScalarSites(s);
    const Participation all = Participation::AllActive(s);
    const Rng rng(200 + s);
    std::vector<double> cape(rounds), conv(rounds);
    for (int r = 0; r < rounds; ++r) {
      cape[r] = CapeAggregate(local, taus, all, DefaultThreshold(s), rng.Stream({1, static_cast<std::uint64_t>(r)})).aggregate[0];
      conv[r] = ConventionalAggregate(local, taus, all, rng.Stream({2, static_cast<std::uint64_t>(r)})).aggregate[0];
    }
    const double g = Variance(conv) / Variance(cape);
    pass = pass && g >= 0.95 * s && g <= 1.05 * s;
    d << "S=" << s << " G=" << g << "; ";
  }
  return {pass, d.str()};
}

Outcome ZeroSumExactness() {
  const PrimeField f;
  const int s = 5, rounds = 100000;
  const std::vector<NoiseScale> taus(s, NoiseScale(0.5));
  const Rng rng(303);
  int exact = 0, dropout_rounds = 0;
  for (int r = 0; r < rounds; ++r) {
    Participation p = Participation::AllActive(s);
    if (r % 2 == 1) {
      p.dropped[r % s] = true;  // 4 of 5 active, threshold 3
      ++dropout_rounds;
    }
    const ZeroSumNoise z = GenerateZeroSumNoise(taus, 1, DefaultThreshold(s), p, rng.Stream(r));
    std::uint64_t sum = 0;
    for (int i = 0; i < s; ++i) {
      if (p.active(i)) sum = f.Add(sum, z.e_field[i].elems[0]);
    }
    exact += sum == 0;
  }
  std::ostringstream d;
  d << exact << "/" << rounds << " rounds exact, " << dropout_rounds << " with a dropout";
  return {exact == rounds, d.str()};
}

Outcome MomentIdentityAndTail() {
  int exact = 0, grid = 0;
  for (int s : {3, 4, 5, 7, 10, 13, 20, 31, 50, 100}) {
    for (double tau : {1e-3, 1e-2, 0.1, 1.0, 10.0}) {
      for (double n : {100.0, 1e3, 1e4, 1e5}) {
        for (int k = 0; k < 5; ++k) {
          const int sc = MaxColluders(s) * k / 4;
          const CapeMoments m = ComputeCapeMoments(s, sc, NoiseScale(tau), std::max(n, double(s)));
          ++grid;
          exact += m.sigma_z_sq == 2.0 * m.mu_z;
        }
      }
    }
  }
  // Tail check: z ~ N(mu, 2 mu) at three calibrated points.
  bool tails = true;
  std::ostringstream d;
  d << exact << "/" << grid << " exact; ";
  Rng rng(404);
  const struct {
    int s;
    double n, eps;
  } points[] = {{4, 1000, 1.0}, {10, 2000, 0.5}, {7, 300, 2.0}};
  for (const auto& p : points) {
    // Smallest tau on a 1.05x ladder whose delta drops to 1e-2.
    double tau = 1e-6;
    CapeMoments m;
    DeltaResult bound;
    for (;; tau *= 1.05) {
      m = ComputeCapeMoments(p.s, MaxColluders(p.s), NoiseScale(tau), p.n);
      if (m.mu_z >= p.eps) continue;
      bound = CapeDelta(p.eps, m);
      if (bound.delta <= 1e-2) break;
    }
    const int draws = 10000000;
    int hits = 0;
    for (int i = 0; i < draws; ++i) hits += std::abs(rng.Normal(m.mu_z, m.sigma_z())) > p.eps;
    const double freq = static_cast<double>(hits) / draws;
    tails = tails && freq <= bound.delta;
    d << "Pr=" << freq << " <= delta=" << bound.delta << "; ";
  }
  return {exact == grid && grid >= 1000 && tails, d.str()};
}

Outcome DeltaOrdering() {
  const ExperimentOutput b = RunExperiment(ExperimentConfig::Defaults(ExperimentKind::kDeltaCompare));
  const ExperimentOutput c = RunExperiment(ExperimentConfig::Defaults(ExperimentKind::kCollusionSweep));
  std::ostringstream d;
  for (const auto& out : {&b, &c}) {
    for (const auto& check : out->checks) d << check.name << ": " << (check.passed ? "ok" : "FAILED") << " (" << check.detail << "); ";
  }
  return {b.ok() && c.ok(), d.str()};
}

Outcome SensitivitySoundness() {
  const int n = 10, dim = 3, trials = 10000;
  Rng rng(606);
  bool sound = true;
  double logistic_d0 = 0.0;
  std::ostringstream d;
  for (LossKind kind : {LossKind::kLinearRegression, LossKind::kLogisticRegression}) {
    const LossSpec spec{kind};
    const auto table = SensitivityTable(spec, n);
    std::array<double, 3> worst{0.0, 0.0, 0.0};
    const auto label = [&]() {
      return kind == LossKind::kLinearRegression ? 2.0 * rng.Uniform01() - 1.0
                                                 : static_cast<double>(rng.UniformBelow(2));
    };
    for (int t = 0; t < trials; ++t) {
      Eigen::MatrixXd x(n, dim);
      Eigen::VectorXd y(n);
      for (int i = 0; i < n; ++i) {
        x.row(i) = BallPoint(dim, rng).transpose();
        y(i) = label();
      }
      Eigen::MatrixXd x2 = x;
      Eigen::VectorXd y2 = y;
      const int k = static_cast<int>(rng.UniformBelow(n));
      x2.row(k) = BallPoint(dim, rng).transpose();
      y2(k) = label();
      const QuadraticCoeffs a = BuildCoeffs(spec, x, y), b = BuildCoeffs(spec, x2, y2);
      worst[0] = std::max(worst[0], std::abs(a.l0 - b.l0));
      worst[1] = std::max(worst[1], (a.l1 - b.l1).norm());
      worst[2] = std::max(worst[2], (a.l2 - b.l2).norm());
    }
    for (int j = 0; j < 3; ++j) sound = sound && worst[j] <= table[j] * (1 + 1e-12);
    if (kind == LossKind::kLogisticRegression) logistic_d0 = worst[0];
    d << LossKindName(kind) << " max/closed-form = " << worst[0] / std::max(table[0], 1e-300) << ", "
      << worst[1] / table[1] << ", " << worst[2] / table[2] << "; ";
  }

  // Witness pairs differing in the last row.
  const auto witness = [&](LossKind kind, const Eigen::VectorXd& xa, double ya, const Eigen::VectorXd& xb,
                           double yb, int degree) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, dim);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd x2 = x;
    Eigen::VectorXd y2 = y;
    x.row(n - 1) = xa.transpose();
    y(n - 1) = ya;
    x2.row(n - 1) = xb.transpose();
    y2(n - 1) = yb;
    const LossSpec spec{kind};
    const QuadraticCoeffs a = BuildCoeffs(spec, x, y), b = BuildCoeffs(spec, x2, y2);
    const double diff = degree == 1 ? (a.l1 - b.l1).norm() : (a.l2 - b.l2).norm();
    return diff / SensitivityTable(spec, n)[degree];
  };
  const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(dim, 0), e2 = Eigen::VectorXd::Unit(dim, 1);
  const double lin1 = witness(LossKind::kLinearRegression, e1, 1.0, e1, -1.0, 1);
  const double lin2 = witness(LossKind::kLinearRegression, e1, 0.0, e2, 0.0, 2);
  const double log2 = witness(LossKind::kLogisticRegression, e1, 0.0, e2, 0.0, 2);
  d << "witness ratios: linear D1 " << lin1 << ", linear D2 " << lin2 << ", logistic D2 " << log2
    << "; logistic D0 max " << logistic_d0;
  const bool tight = lin1 >= 0.95 && lin2 >= 0.95 && log2 >= 0.95;
  return {sound && tight && logistic_d0 == 0.0, d.str()};
}

Outcome OlsEquivalence() {
  Rng rng(707);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int dim = 1 + static_cast<int>(rng.UniformBelow(50));
    const int n = 5 * dim + static_cast<int>(rng.UniformBelow(5000 - 5 * dim));
    const RegressionData data = GenSyntheticRegression(dim, n, 0.1, 7000 + i);
    Rng split = rng.Stream(i);
    SiteData pooled;
    const auto sites = SplitSites(data.data.x, data.data.y, 5, split, &pooled);
    const std::array<NoiseScale, 3> zero{NoiseScale(0.0), NoiseScale(0.0), NoiseScale(0.0)};
    const DistributedFmResult fm = RunCapeFm(sites, LossSpec{}, zero, rng.Stream(1000 + i));
    const Eigen::VectorXd w = MinimizeQuadratic(fm.objective).w_hat;
    const Eigen::VectorXd ols = pooled.x.colPivHouseholderQr().solve(pooled.y);
    worst = std::max(worst, (w - ols).norm() / ols.norm());
  }
  std::ostringstream d;
  d << "max relative difference " << worst;
  return {worst <= 1e-8, d.str()};
}

Outcome RepresentationIdentity() {
  Rng rng(808);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int dim = 1 + static_cast<int>(rng.UniformBelow(20));
    const int n = 1 + static_cast<int>(rng.UniformBelow(300));
    Eigen::MatrixXd x(n, dim);
    Eigen::VectorXd y(n), w(dim);
    for (int r = 0; r < n; ++r) {
      x.row(r) = BallPoint(dim, rng).transpose();
      y(r) = 2.0 * rng.Uniform01() - 1.0;
    }
    for (int c = 0; c < dim; ++c) w(c) = rng.Normal(0.0, 3.0);
    const double via_coeffs = EvaluateObjective({BuildCoeffsLinear(x, y), Provenance::kExact}, w);
    const double direct = SquaredLoss(x, y, w);
    worst = std::max(worst, std::abs(via_coeffs - direct) / std::abs(direct));
  }
  std::ostringstream d;
  d << "max relative difference " << worst;
  return {worst <= 1e-10, d.str()};
}

Outcome CoefficientVariance() {
  const int s = 5, dim = 2, n_site = 200, rounds = 10000;
  const RegressionData data = GenSyntheticRegression(dim, s * n_site, 0.1, 909);
  Rng split(910);
  const auto sites = SplitSites(data.data.x, data.data.y, s, split);
  const LossSpec spec;
  const PrivacyBudget budget(1.0, 1e-5);
  const auto tau_site = DegreeNoiseScales(spec, n_site, budget);
  const auto tau_pool = DegreeNoiseScales(spec, s * n_site, budget);
  std::array<std::vector<std::vector<double>>, 3> draws;
  const Rng rng(911);
  for (int r = 0; r < rounds; ++r) {
    const DistributedFmResult fm = RunCapeFm(sites, spec, tau_site, rng.Stream(r));
    for (int j = 0; j < 3; ++j) {
      const auto flat = fm.objective.coeffs.Flatten(j);
      draws[j].resize(flat.size());
      for (std::size_t k = 0; k < flat.size(); ++k) draws[j][k].push_back(flat[k]);
    }
  }
  bool pass = true;
  std::ostringstream d;
  for (int j = 0; j < 3; ++j) {
    double mean_var = 0.0;
    for (const auto& entry : draws[j]) mean_var += Variance(entry);
    mean_var /= draws[j].size();
    const double ratio = mean_var / tau_pool[j].variance();
    pass = pass && std::abs(ratio - 1.0) <= 0.05;
    d << "degree " << j << " var/pooled = " << ratio << "; ";
  }
  return {pass, d.str()};
}

ExperimentOutput linreg_eps;  // shared with criterion 12

Outcome LinregTrends() {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig c = ExperimentConfig::Defaults(ExperimentKind::kLinreg);
  c.modes = {"non-priv", "capeFM", "conv", "local", "dpfm"};
  linreg_eps = RunExperiment(c);
  ExperimentConfig cn = c;
  cn.axis = "N";
  cn.grid = {5000, 10000, 20000, 50000, 100000};
  cn.modes = {"capeFM"};
  const ExperimentOutput by_n = RunExperiment(cn);
  const double secs = Seconds(start);

  const auto m = [&](const std::string& mode) { return linreg_eps.Mean("epsilon", 1.0, mode, "loss"); };
  const bool ordered = m("non-priv") <= m("capeFM") && m("capeFM") <= m("conv") && m("conv") <= m("local");
  std::vector<double> eps_means, n_means;
  for (double x : c.grid) eps_means.push_back(linreg_eps.Mean("epsilon", x, "capeFM", "loss"));
  for (double x : cn.grid) n_means.push_back(by_n.Mean("N", x, "capeFM", "loss"));
  const double rho_eps = SpearmanRho(c.grid, eps_means);
  const double rho_n = SpearmanRho(cn.grid, n_means);
  std::ostringstream d;
  d << "eps=1 losses non-priv " << m("non-priv") << ", capeFM " << m("capeFM") << ", conv " << m("conv")
    << ", local " << m("local") << "; rho(eps) " << rho_eps << ", rho(N) " << rho_n << "; " << secs << " s";
  const bool clean = linreg_eps.cell_errors.empty() && by_n.cell_errors.empty();
  return {ordered && rho_eps <= -0.9 && rho_n <= -0.9 && secs < 300.0 && clean, d.str()};
}

Outcome NnTrend() {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig c = ExperimentConfig::Defaults(ExperimentKind::kNn);
  const ExperimentOutput out = RunExperiment(c);
  const double secs = Seconds(start);
  bool grad_ok = false;
  for (const auto& check : out.checks) {
    if (check.name == "gradient finite-difference check") grad_ok = check.passed;
  }
  bool pass = grad_ok && out.cell_errors.empty();
  std::ostringstream d;
  for (double x : c.grid) {
    const double cape = out.Mean("epsilon", x, "cape", "test_acc");
    const double conv = out.Mean("epsilon", x, "conv", "test_acc");
    pass = pass && cape >= conv - 0.5;
    d << "eps=" << x << " cape " << cape << " conv " << conv << "; ";
  }
  const double top = c.grid.back();
  const double gap = std::abs(out.Mean("epsilon", top, "cape", "test_acc") -
                              out.Mean("epsilon", top, "non-priv", "test_acc"));
  pass = pass && gap <= 2.0 && secs < 900.0;
  d << "gap to non-priv at eps=" << top << ": " << gap << "; " << secs << " s";
  return {pass, d.str()};
}

Outcome DpfmDominance() {
  bool closed_form = true;
  const PrivacyBudget budget(1.0, 1e-5);
  const double n = 1000.0;
  for (LossKind kind : {LossKind::kLinearRegression, LossKind::kLogisticRegression}) {
    const LossSpec spec{kind};
    const auto tau = DegreeNoiseScales(spec, n, budget);
    const double gauss = std::max({tau[0].tau(), tau[1].tau(), tau[2].tau()});
    for (int dim = 2; dim <= 64; ++dim) {
      const double laplace_sd = std::sqrt(2.0) * DpfmSensitivity(spec, n, dim) / budget.epsilon();
      closed_form = closed_form && laplace_sd > gauss;
    }
  }
  bool trend = true;
  std::ostringstream d;
  const ExperimentConfig c = ExperimentConfig::Defaults(ExperimentKind::kLinreg);
  for (double x : c.grid) {
    const double dp = linreg_eps.Mean("epsilon", x, "dpfm", "loss");
    const double cf = linreg_eps.Mean("epsilon", x, "capeFM", "loss");
    trend = trend && dp > cf;
    d << "eps=" << x << " dpfm " << dp << " capeFM " << cf << "; ";
  }
  d << "closed form " << (closed_form ? "ok" : "FAILED");
  return {closed_form && trend, d.str()};
}

Outcome SchurConvexity() {
  ExperimentConfig c = ExperimentConfig::Defaults(ExperimentKind::kHRatio);
  c.seeds = {1, 2};
  c.compositions = 1000;  // 5 S values x 2 seeds x 1000 = 10^4
  const ExperimentOutput out = RunExperiment(c);
  std::ostringstream d;
  for (const auto& check : out.checks) d << check.name << ": " << (check.passed ? "ok" : "FAILED") << "; ";
  return {out.ok() && out.checks.size() == 3, d.str()};
}

Outcome CommunicationAccounting() {
  std::vector<int> sites, dims;
  std::vector<double> cost;
  bool conv_exact = true;
  for (int s : {3, 5, 8, 12, 20}) {
    for (int dim : {1, 4, 16, 32, 64}) {
      const CostReport conv = CommunicationCost(s, dim, Protocol::kConventional);
      conv_exact = conv_exact && conv.aggregator_scalars_received == static_cast<std::int64_t>(s) * dim;
      const CostReport cape = CommunicationCost(s, dim, Protocol::kCape);
      sites.push_back(s);
      dims.push_back(dim);
      cost.push_back(static_cast<double>(cape.per_site_scalars[0]));
    }
  }
  const AffineCostFit fit = FitAffineCost(sites, dims, cost);
  std::ostringstream d;
  d << "conventional exact: " << (conv_exact ? "yes" : "no") << "; cape per-site fit " << fit.intercept
    << " + " << fit.per_site << " S + " << fit.per_dim << " D, R^2 " << fit.r_squared;
  return {conv_exact && fit.r_squared > 0.99, d.str()};
}

int Run() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"pooled-variance equality", PooledVarianceEquality},
      {"gain G = S", GainEqualsS},
      {"zero-sum exactness", ZeroSumExactness},
      {"privacy-loss moment identity and tail bound", MomentIdentityAndTail},
      {"delta below conventional delta", DeltaOrdering},
      {"sensitivity soundness and tightness", SensitivitySoundness},
      {"OLS equivalence", OlsEquivalence},
      {"representation identity", RepresentationIdentity},
      {"capeFM coefficient variance equals pooled", CoefficientVariance},
      {"linear regression trends", LinregTrends},
      {"NN trends", NnTrend},
      {"dp-fm dominance", DpfmDominance},
      {"H(n) Schur-convexity", SchurConvexity},
      {"communication accounting", CommunicationAccounting},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %zu: %s -- %s\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace cape

int main() { return cape::Run(); }
