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

#include "cape/functional_mechanism.h"

#include <cmath>
#include <sstream>

#include "cape/error.h"

namespace cape {
namespace {

// Slack on the unit-norm bound for rows normalized in floating point.
constexpr double kNormSlack = 1e-12;

void RequireBounds(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const LossSpec& spec) {
  if (x.rows() != y.size()) throw Error(ErrorCode::kDimensionMismatch, "X and y differ in rows");
  if (x.rows() == 0) throw Error(ErrorCode::kData, "no samples");
  const std::vector<int> rejected = RejectedSamples(x, y, spec);
  if (rejected.empty()) return;
  std::ostringstream msg;
  msg << rejected.size() << " samples violate the " << LossKindName(spec.kind)
      << " bounds; rows:";
  for (std::size_t i = 0; i < rejected.size() && i < 20; ++i) msg << ' ' << rejected[i];
  if (rejected.size() > 20) msg << " ...";
  throw Error(ErrorCode::kBoundViolation, msg.str());
}

}  // namespace

const char* LossKindName(LossKind kind) {
  return kind == LossKind::kLinearRegression ? "linear_regression" : "logistic_regression";
}

const char* ProvenanceName(Provenance p) {
  switch (p) {
    case Provenance::kExact:
      return "exact";
    case Provenance::kGaussianFm:
      return "gaussian-FM";
    case Provenance::kLaplaceDpfm:
      return "laplace-dpfm";
    case Provenance::kCapeFm:
      return "capeFM";
    case Provenance::kConventionalFm:
      return "conv";
    case Provenance::kLocalFm:
      return "local";
  }
  return "unknown";
}

std::vector<int> RejectedSamples(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 const LossSpec& spec) {
  std::vector<int> rejected;
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    bool ok = x.row(n).norm() <= 1.0 + kNormSlack && std::isfinite(y(n));
    if (spec.kind == LossKind::kLinearRegression) {
      ok = ok && std::abs(y(n)) <= 1.0;
    } else {
      ok = ok && (y(n) == 0.0 || y(n) == 1.0);
    }
    if (!ok) rejected.push_back(static_cast<int>(n));
  }
  return rejected;
}

nlohmann::json CoeffArray::ToJson() const {
  nlohmann::json j;
  j["degree"] = degree;
  j["shape"] = {values.rows(), values.cols()};
  std::vector<double> flat;
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) flat.push_back(values(r, c));
  }
  j["values"] = flat;
  return j;
}

CoeffArray CoeffArray::FromJson(const nlohmann::json& j) {
  CoeffArray a;
  a.degree = j.at("degree").get<int>();
  const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
  const auto flat = j.at("values").get<std::vector<double>>();
  if (shape.size() != 2 || static_cast<std::size_t>(shape[0] * shape[1]) != flat.size()) {
    throw Error(ErrorCode::kData, "coefficient array shape does not match its values");
  }
  a.values.resize(shape[0], shape[1]);
  for (Eigen::Index r = 0; r < shape[0]; ++r) {
    for (Eigen::Index c = 0; c < shape[1]; ++c) a.values(r, c) = flat[r * shape[1] + c];
  }
  return a;
}

CoeffArray QuadraticCoeffs::Degree(int j) const {
  CoeffArray a;
  a.degree = j;
  if (j == 0) {
    a.values = Eigen::MatrixXd::Constant(1, 1, l0);
  } else if (j == 1) {
    a.values = l1;
  } else if (j == 2) {
    a.values = l2;
  } else {
    throw Error(ErrorCode::kParameter, "degree must be 0, 1 or 2");
  }
  return a;
}

std::vector<double> QuadraticCoeffs::Flatten(int j) const {
  const CoeffArray a = Degree(j);
  std::vector<double> flat;
  flat.reserve(a.values.size());
  for (Eigen::Index r = 0; r < a.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.values.cols(); ++c) flat.push_back(a.values(r, c));
  }
  return flat;
}

void QuadraticCoeffs::Assign(int j, const std::vector<double>& flat) {
  const auto d = static_cast<std::size_t>(dim());
  const std::size_t expected = j == 0 ? 1 : (j == 1 ? d : d * d);
  if (flat.size() != expected) throw Error(ErrorCode::kDimensionMismatch, "flat size mismatch");
  if (j == 0) {
    l0 = flat[0];
  } else if (j == 1) {
    for (std::size_t i = 0; i < d; ++i) l1(i) = flat[i];
  } else {
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < d; ++c) l2(r, c) = flat[r * d + c];
    }
  }
}

QuadraticCoeffs QuadraticCoeffs::Zero(int dim) {
  return QuadraticCoeffs{0.0, Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Zero(dim, dim)};
}

QuadraticCoeffs BuildCoeffsLinear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  RequireBounds(x, y, LossSpec{LossKind::kLinearRegression});
  const double n = static_cast<double>(x.rows());
  QuadraticCoeffs c;
  c.l0 = y.squaredNorm() / n;
  c.l1 = -(2.0 / n) * (x.transpose() * y);
  c.l2 = (x.transpose() * x) / n;
  return c;
}

QuadraticCoeffs BuildCoeffsLogistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  RequireBounds(x, y, LossSpec{LossKind::kLogisticRegression});
  const double n = static_cast<double>(x.rows());
  QuadraticCoeffs c;
  c.l0 = std::log(2.0);
  c.l1 = x.transpose() * (Eigen::VectorXd::Constant(y.size(), 0.5) - y) / n;
  c.l2 = (x.transpose() * x) / (8.0 * n);
  return c;
}

QuadraticCoeffs BuildCoeffs(const LossSpec& spec, const Eigen::MatrixXd& x,
                            const Eigen::VectorXd& y) {
  return spec.kind == LossKind::kLinearRegression ? BuildCoeffsLinear(x, y)
                                                  : BuildCoeffsLogistic(x, y);
}

std::array<double, 3> SensitivityTable(const LossSpec& spec, double num_samples) {
  if (!(num_samples >= 1.0)) throw Error(ErrorCode::kParameter, "N must be >= 1");
  const double n = num_samples;
  if (spec.kind == LossKind::kLinearRegression) {
    return {1.0 / n, 4.0 / n, std::sqrt(2.0) / n};
  }
  return {0.0, 1.0 / n, std::sqrt(2.0) / (8.0 * n)};
}

double DpfmSensitivity(const LossSpec& spec, double num_samples, int dim) {
  if (dim < 1 || !(num_samples >= 1.0)) throw Error(ErrorCode::kParameter, "need D, N >= 1");
  const double d = dim;
  if (spec.kind == LossKind::kLinearRegression) return 2.0 * (d + 1.0) * (d + 1.0) / num_samples;
  return (d * d / 4.0 + 3.0 * d) / num_samples;
}

std::array<NoiseScale, 3> DegreeNoiseScales(const LossSpec& spec, double num_samples,
                                            const PrivacyBudget& budget) {
  const auto delta = SensitivityTable(spec, num_samples);
  std::array<NoiseScale, 3> tau;
  for (int j = 0; j < 3; ++j) {
    tau[j] = delta[j] > 0.0 ? GaussianTau(Sensitivity(delta[j]), budget) : NoiseScale(0.0);
  }
  return tau;
}

QuadraticCoeffs AddGaussianNoise(const QuadraticCoeffs& coeffs,
                                 const std::array<NoiseScale, 3>& tau, Rng& rng) {
  QuadraticCoeffs out = coeffs;
  for (int j = 0; j < 3; ++j) {
    if (tau[j].tau() == 0.0) continue;
    std::vector<double> flat = coeffs.Flatten(j);
    GaussianPerturbInPlace(flat, tau[j], rng);
    out.Assign(j, flat);
  }
  return out;
}

PerturbedObjective PerturbObjective(const QuadraticCoeffs& coeffs, const LossSpec& spec,
                                    double num_samples, const PrivacyBudget& budget,
                                    FmMechanism mechanism, Rng& rng) {
  PerturbedObjective obj;
  if (mechanism == FmMechanism::kGaussianFm) {
    obj.coeffs = AddGaussianNoise(coeffs, DegreeNoiseScales(spec, num_samples, budget), rng);
    obj.provenance = Provenance::kGaussianFm;
    return obj;
  }
  const double b = DpfmSensitivity(spec, num_samples, coeffs.dim()) / budget.epsilon();
  obj.coeffs = coeffs;
  for (int j = 0; j < 3; ++j) {
    std::vector<double> flat = coeffs.Flatten(j);
    LaplacePerturbInPlace(flat, b, rng);
    obj.coeffs.Assign(j, flat);
  }
  obj.provenance = Provenance::kLaplaceDpfm;
  return obj;
}

double EvaluateObjective(const PerturbedObjective& obj, const Eigen::VectorXd& w) {
  if (w.size() != obj.coeffs.dim()) throw Error(ErrorCode::kDimensionMismatch, "dim(w) != D");
  return obj.coeffs.l0 + obj.coeffs.l1.dot(w) + w.dot(obj.coeffs.l2 * w);
}

Eigen::VectorXd ObjectiveGradient(const PerturbedObjective& obj, const Eigen::VectorXd& w) {
  if (w.size() != obj.coeffs.dim()) throw Error(ErrorCode::kDimensionMismatch, "dim(w) != D");
  return obj.coeffs.l1 + (obj.coeffs.l2 + obj.coeffs.l2.transpose()) * w;
}

double SquaredLoss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  return (y - x * w).squaredNorm() / static_cast<double>(x.rows());
}

double LogisticLoss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  const Eigen::VectorXd z = x * w;
  double sum = 0.0;
  for (Eigen::Index n = 0; n < z.size(); ++n) {
    // log(1 + e^z) - y z, stable for large |z|.
    const double softplus = z(n) > 0 ? z(n) + std::log1p(std::exp(-z(n))) : std::log1p(std::exp(z(n)));
    sum += softplus - y(n) * z(n);
  }
  return sum / static_cast<double>(z.size());
}

}  // namespace cape
