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

#ifndef CAPE_FUNCTIONAL_MECHANISM_H_
#define CAPE_FUNCTIONAL_MECHANISM_H_

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cape/privacy.h"
#include "cape/rng.h"
#include "json.hpp"

namespace cape {

enum class LossKind { kLinearRegression, kLogisticRegression };

const char* LossKindName(LossKind kind);

// Loss with its domain: ||x_n||_2 <= 1 and y_n in [-1, 1] (linear) or
// y_n in {0, 1} (logistic).
struct LossSpec {
  LossKind kind = LossKind::kLinearRegression;
};

// Rows of (X, y) violating the loss domain.
std::vector<int> RejectedSamples(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 const LossSpec& spec);

// One degree-j coefficient array: 1x1 (j = 0), Dx1 (j = 1) or DxD (j = 2).
struct CoeffArray {
  int degree = 0;
  Eigen::MatrixXd values;

  nlohmann::json ToJson() const;
  static CoeffArray FromJson(const nlohmann::json& j);
};

// Coefficients of a degree-2 polynomial objective
//   f(w) = l0 + <l1, w> + w' l2 w.
struct QuadraticCoeffs {
  double l0 = 0.0;
  Eigen::VectorXd l1;
  Eigen::MatrixXd l2;

  int dim() const { return static_cast<int>(l1.size()); }
  CoeffArray Degree(int j) const;
  // Row-major flattening of degree j.
  std::vector<double> Flatten(int j) const;
  void Assign(int j, const std::vector<double>& flat);

  static QuadraticCoeffs Zero(int dim);
};

enum class Provenance { kExact, kGaussianFm, kLaplaceDpfm, kCapeFm, kConventionalFm, kLocalFm };

const char* ProvenanceName(Provenance p);

struct PerturbedObjective {
  QuadraticCoeffs coeffs;
  Provenance provenance = Provenance::kExact;
};

// Throw kBoundViolation naming the rejected rows.
QuadraticCoeffs BuildCoeffsLinear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
// Order-2 Taylor surrogate of the logistic loss around w = 0.
QuadraticCoeffs BuildCoeffsLogistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
QuadraticCoeffs BuildCoeffs(const LossSpec& spec, const Eigen::MatrixXd& x,
                            const Eigen::VectorXd& y);

// Per-degree L2 (Frobenius) sensitivities.
std::array<double, 3> SensitivityTable(const LossSpec& spec, double num_samples);

// L1 sensitivity of the original functional mechanism.
double DpfmSensitivity(const LossSpec& spec, double num_samples, int dim);

enum class FmMechanism { kGaussianFm, kLaplaceDpfm };

// Gaussian: GaussianTau(Delta_j) per degree, no noise where Delta_j = 0.
// Laplace: scale Delta^dp-fm / epsilon on every entry of every degree.
PerturbedObjective PerturbObjective(const QuadraticCoeffs& coeffs, const LossSpec& spec,
                                    double num_samples, const PrivacyBudget& budget,
                                    FmMechanism mechanism, Rng& rng);

// Adds N(0, tau_j^2) to every entry of degree j.
QuadraticCoeffs AddGaussianNoise(const QuadraticCoeffs& coeffs,
                                 const std::array<NoiseScale, 3>& tau, Rng& rng);

// tau_j per degree for the Gaussian functional mechanism.
std::array<NoiseScale, 3> DegreeNoiseScales(const LossSpec& spec, double num_samples,
                                            const PrivacyBudget& budget);

double EvaluateObjective(const PerturbedObjective& obj, const Eigen::VectorXd& w);
Eigen::VectorXd ObjectiveGradient(const PerturbedObjective& obj, const Eigen::VectorXd& w);

// Direct losses for cross-checks.
double SquaredLoss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w);
double LogisticLoss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w);

}  // namespace cape

#endif  // CAPE_FUNCTIONAL_MECHANISM_H_
