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

#include "cape/solvers.h"

#include <cmath>
#include <sstream>

#include "cape/error.h"

namespace cape {
namespace {

constexpr double kRidgeSchedule[] = {1e-8, 1e-6, 1e-4};
constexpr double kMinRcond = 1e-13;

}  // namespace

QuadraticSolveResult MinimizeQuadratic(const PerturbedObjective& obj, double ridge) {
  if (!(ridge >= 0.0)) throw Error(ErrorCode::kParameter, "ridge must be >= 0");
  const int d = obj.coeffs.dim();
  QuadraticSolveResult result;
  if (d == 0) {
    result.w_hat = Eigen::VectorXd();
    return result;
  }
  const Eigen::MatrixXd sym = 0.5 * (obj.coeffs.l2 + obj.coeffs.l2.transpose());
  const Eigen::VectorXd rhs = -0.5 * obj.coeffs.l1;
  double unit = std::abs(sym.trace()) / d;
  if (!(unit > 0.0)) unit = 1.0;

  std::vector<double> candidates = {ridge};
  if (ridge == 0.0) {
    for (double r : kRidgeSchedule) candidates.push_back(r * unit);
  }
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(sym + candidates[i] * eye);
    if (ldlt.info() != Eigen::Success) continue;
    // LDLT silently zeroes null pivots on solve; require a well-scaled diagonal.
    const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
    if (!(pivots.minCoeff() > kMinRcond * pivots.maxCoeff()) || !(ldlt.rcond() > kMinRcond)) {
      continue;
    }
    result.w_hat = ldlt.solve(rhs);
    if (!result.w_hat.allFinite()) continue;
    result.regularizer_used = candidates[i];
    result.condition_flag = i > 0 || !ldlt.isPositive();
    return result;
  }
  // Nothing solvable: minimum-norm least-squares answer at the largest ridge.
  const double last = candidates.back();
  result.w_hat = (sym + last * eye).completeOrthogonalDecomposition().solve(rhs);
  result.regularizer_used = last;
  result.condition_flag = true;
  return result;
}

GradientDescentResult GradientDescent(const LossAndGradient& f, const Eigen::VectorXd& w0,
                                      const GradientDescentOptions& options) {
  if (!(options.step > 0.0)) throw Error(ErrorCode::kParameter, "step must be positive");
  GradientDescentResult result;
  result.w = w0;
  Eigen::VectorXd grad(w0.size());
  double loss = f(result.w, &grad);
  result.loss_trace.push_back(loss);
  int rising = 0;
  for (int it = 0; it < options.max_iters; ++it) {
    if (grad.norm() < options.tol) {
      result.converged = true;
      break;
    }
    result.w -= options.step * grad;
    const double next = f(result.w, &grad);
    result.loss_trace.push_back(next);
    result.iterations = it + 1;
    rising = next > loss ? rising + 1 : 0;
    loss = next;
    if (rising >= options.divergence_window || !std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "loss rose " << rising << " iterations in a row; trace:";
      const std::size_t n = result.loss_trace.size();
      for (std::size_t i = n > 12 ? n - 12 : 0; i < n; ++i) msg << ' ' << result.loss_trace[i];
      throw Error(ErrorCode::kDivergence, msg.str());
    }
  }
  if (!result.converged && grad.norm() < options.tol) result.converged = true;
  return result;
}

GradientDescentResult GradientDescent(const PerturbedObjective& obj, const Eigen::VectorXd& w0,
                                      const GradientDescentOptions& options) {
  return GradientDescent(
      [&obj](const Eigen::VectorXd& w, Eigen::VectorXd* grad) {
        *grad = ObjectiveGradient(obj, w);
        return EvaluateObjective(obj, w);
      },
      w0, options);
}

}  // namespace cape
