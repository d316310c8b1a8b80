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

#ifndef CAPE_NN_H_
#define CAPE_NN_H_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cape/privacy.h"
#include "cape/rng.h"
#include "cape/secure_agg.h"

namespace cape {

// Two-layer classifier: y_hat = sigmoid(W2 ReLU(W1 x + b1) + b2).
struct NNParams {
  Eigen::MatrixXd w1;  // hidden x input
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // 1 x hidden
  Eigen::VectorXd b2;  // size 1

  int input_dim() const { return static_cast<int>(w1.cols()); }
  int hidden() const { return static_cast<int>(w1.rows()); }
  int num_params() const;

  std::vector<double> Flatten() const;
  void Assign(const std::vector<double>& flat);

  static NNParams Zero(int input_dim, int hidden);
  // Uniform in +/- 1/sqrt(fan_in) per layer.
  static NNParams Init(int input_dim, int hidden, Rng& rng);
};

struct ForwardCache {
  Eigen::MatrixXd z1;  // N x hidden
  Eigen::MatrixXd a1;
  Eigen::VectorXd y_hat;
};

// Rows of x are samples. Throws kDimensionMismatch on shape errors.
ForwardCache NNForward(const NNParams& params, const Eigen::MatrixXd& x);

// Mean cross-entropy.
double CrossEntropy(const Eigen::VectorXd& y_hat, const Eigen::VectorXd& y);

// Gradient of the mean cross-entropy. If `example_scale` is given, example n
// contributes its gradient multiplied by example_scale[n].
NNParams NNBackward(const NNParams& params, const ForwardCache& cache, const Eigen::MatrixXd& x,
                    const Eigen::VectorXd& y, const Eigen::VectorXd* example_scale = nullptr);

struct GradientClipSpec {
  double clip_norm = 1.0;

  // L2 sensitivity of a clipped average over `local_samples` examples.
  double Sensitivity(int local_samples) const { return 2.0 * clip_norm / local_samples; }
};

// Per-example L2 norms of the full parameter gradient.
Eigen::VectorXd PerExampleGradNorms(const NNParams& params, const ForwardCache& cache,
                                    const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// Mean of per-example gradients each clipped to norm <= C. Throws
// kBoundViolation if a clipped contribution exceeds C.
NNParams ClippedGradient(const NNParams& params, const Eigen::MatrixXd& x,
                         const Eigen::VectorXd& y, const GradientClipSpec& clip);

// Percentage of round(y_hat) == y.
double Accuracy(const NNParams& params, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

enum class GdMode { kNonPrivate, kConventional, kCape };
const char* GdModeName(GdMode mode);

struct ClassSite {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

struct DistributedGdConfig {
  int hidden = 12;
  int iterations = 200;
  double learning_rate = 0.1;
  double epsilon = 1.0;  // per iteration
  double delta = 0.01;
  GdMode mode = GdMode::kCape;
  GradientClipSpec clip;
  int threshold = 0;     // 0 selects DefaultThreshold(S)
  bool disable_noise = false;
  int trace_every = 0;   // 0 records only the final iteration
};

struct TraceRow {
  int iteration = 0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double loss = 0.0;
};

struct DistributedGdResult {
  NNParams params;
  std::vector<TraceRow> trace;
  int aborted_iterations = 0;
  double tau_site = 0.0;
};

// Every iteration each site computes its clipped mean gradient over the
// flattened parameter vector; releases follow the mode (no noise, independent
// Gaussian, or CAPE); the aggregator averages and steps. Clipping is applied
// in every mode so the modes differ only by their noise.
DistributedGdResult DistributedDpGd(const std::vector<ClassSite>& sites, const ClassSite& test,
                                    const DistributedGdConfig& config, const Rng& rng);

// Centralized reference: the same clipped descent on one data set.
NNParams CentralizedGd(const ClassSite& data, const DistributedGdConfig& config, const Rng& rng);

// Largest relative error between the analytic gradient and central
// differences of the mean cross-entropy.
double GradientCheck(const NNParams& params, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     double h = 1e-6);

}  // namespace cape

#endif  // CAPE_NN_H_
