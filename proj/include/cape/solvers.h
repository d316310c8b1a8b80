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

#ifndef CAPE_SOLVERS_H_
#define CAPE_SOLVERS_H_

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "cape/functional_mechanism.h"

namespace cape {

struct QuadraticSolveResult {
  Eigen::VectorXd w_hat;
  double regularizer_used = 0.0;
  // Set when the ridge had to be escalated or the symmetrized matrix is not
  // positive definite (the solution is then a saddle of the surrogate).
  bool condition_flag = false;
};

// Solves (sym(l2) + ridge I) w = -l1 / 2. With ridge = 0 a singular system
// escalates through {1e-8, 1e-6, 1e-4} * |trace| / D.
QuadraticSolveResult MinimizeQuadratic(const PerturbedObjective& obj, double ridge = 0.0);

// Loss value and gradient at w.
using LossAndGradient = std::function<double(const Eigen::VectorXd& w, Eigen::VectorXd* grad)>;

struct GradientDescentOptions {
  double step = 0.1;
  int max_iters = 1000;
  double tol = 1e-8;          // stop when ||grad|| < tol
  int divergence_window = 10; // consecutive loss increases that abort
};

struct GradientDescentResult {
  Eigen::VectorXd w;
  int iterations = 0;
  bool converged = false;
  std::vector<double> loss_trace;
};

// Fixed-step descent. Throws kDivergence (message carries the recent trace)
// when the loss rises `divergence_window` times in a row.
GradientDescentResult GradientDescent(const LossAndGradient& f, const Eigen::VectorXd& w0,
                                      const GradientDescentOptions& options = {});

GradientDescentResult GradientDescent(const PerturbedObjective& obj, const Eigen::VectorXd& w0,
                                      const GradientDescentOptions& options = {});

}  // namespace cape

#endif  // CAPE_SOLVERS_H_
