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

#include "cape/nn.h"

#include <algorithm>
#include <cmath>

#include "cape/cape_protocol.h"
#include "cape/error.h"

namespace cape {
namespace {

enum StreamTag : std::uint64_t { kInitStream = 30, kIterStream = 31 };

constexpr double kProbFloor = 1e-15;

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

ClassSite PoolSites(const std::vector<ClassSite>& sites) {
  Eigen::Index n = 0;
  for (const auto& s : sites) n += s.x.rows();
  ClassSite all;
  all.x.resize(n, sites.front().x.cols());
  all.y.resize(n);
  Eigen::Index row = 0;
  for (const auto& s : sites) {
    all.x.middleRows(row, s.x.rows()) = s.x;
    all.y.segment(row, s.x.rows()) = s.y;
    row += s.x.rows();
  }
  return all;
}

TraceRow MakeTrace(int iteration, const NNParams& params, const ClassSite& train,
                   const ClassSite& test) {
  TraceRow row;
  row.iteration = iteration;
  const ForwardCache cache = NNForward(params, train.x);
  row.loss = CrossEntropy(cache.y_hat, train.y);
  row.train_acc = Accuracy(params, train.x, train.y);
  row.test_acc = test.x.rows() > 0 ? Accuracy(params, test.x, test.y) : 0.0;
  return row;
}

}  // namespace

int NNParams::num_params() const {
  return static_cast<int>(w1.size() + b1.size() + w2.size() + b2.size());
}

std::vector<double> NNParams::Flatten() const {
  std::vector<double> flat;
  flat.reserve(num_params());
  for (Eigen::Index r = 0; r < w1.rows(); ++r) {
    for (Eigen::Index c = 0; c < w1.cols(); ++c) flat.push_back(w1(r, c));
  }
  for (Eigen::Index i = 0; i < b1.size(); ++i) flat.push_back(b1(i));
  for (Eigen::Index c = 0; c < w2.cols(); ++c) flat.push_back(w2(0, c));
  flat.push_back(b2(0));
  return flat;
}

void NNParams::Assign(const std::vector<double>& flat) {
  if (static_cast<int>(flat.size()) != num_params()) {
    throw Error(ErrorCode::kDimensionMismatch, "flat parameter size mismatch");
  }
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < w1.rows(); ++r) {
    for (Eigen::Index c = 0; c < w1.cols(); ++c) w1(r, c) = flat[k++];
  }
  for (Eigen::Index i = 0; i < b1.size(); ++i) b1(i) = flat[k++];
  for (Eigen::Index c = 0; c < w2.cols(); ++c) w2(0, c) = flat[k++];
  b2(0) = flat[k];
}

NNParams NNParams::Zero(int input_dim, int hidden) {
  return NNParams{Eigen::MatrixXd::Zero(hidden, input_dim), Eigen::VectorXd::Zero(hidden),
                  Eigen::MatrixXd::Zero(1, hidden), Eigen::VectorXd::Zero(1)};
}

NNParams NNParams::Init(int input_dim, int hidden, Rng& rng) {
  NNParams p = Zero(input_dim, hidden);
  const double r1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double r2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Eigen::Index i = 0; i < p.w1.size(); ++i) p.w1.data()[i] = r1 * (2.0 * rng.Uniform01() - 1.0);
  for (Eigen::Index i = 0; i < p.b1.size(); ++i) p.b1(i) = r1 * (2.0 * rng.Uniform01() - 1.0);
  for (Eigen::Index i = 0; i < p.w2.size(); ++i) p.w2.data()[i] = r2 * (2.0 * rng.Uniform01() - 1.0);
  p.b2(0) = r2 * (2.0 * rng.Uniform01() - 1.0);
  return p;
}

ForwardCache NNForward(const NNParams& params, const Eigen::MatrixXd& x) {
  if (x.cols() != params.w1.cols() || params.b1.size() != params.w1.rows() ||
      params.w2.rows() != 1 || params.w2.cols() != params.w1.rows() || params.b2.size() != 1) {
    throw Error(ErrorCode::kDimensionMismatch, "network shapes do not agree");
  }
  ForwardCache cache;
  cache.z1 = (x * params.w1.transpose()).rowwise() + params.b1.transpose();
  cache.a1 = cache.z1.cwiseMax(0.0);
  const Eigen::VectorXd z2 = (cache.a1 * params.w2.transpose()).array() + params.b2(0);
  cache.y_hat = z2.unaryExpr(&Sigmoid);
  return cache;
}

double CrossEntropy(const Eigen::VectorXd& y_hat, const Eigen::VectorXd& y) {
  double sum = 0.0;
  for (Eigen::Index n = 0; n < y.size(); ++n) {
    const double p = std::clamp(y_hat(n), kProbFloor, 1.0 - kProbFloor);
    sum -= y(n) * std::log(p) + (1.0 - y(n)) * std::log(1.0 - p);
  }
  return sum / static_cast<double>(y.size());
}

NNParams NNBackward(const NNParams& params, const ForwardCache& cache, const Eigen::MatrixXd& x,
                    const Eigen::VectorXd& y, const Eigen::VectorXd* example_scale) {
  const double n = static_cast<double>(x.rows());
  Eigen::VectorXd d2 = cache.y_hat - y;
  if (example_scale != nullptr) d2 = d2.cwiseProduct(*example_scale);
  const Eigen::MatrixXd d1 =
      ((d2 * params.w2).array() * (cache.z1.array() > 0.0).cast<double>()).matrix();
  NNParams g;
  g.w2 = (d2.transpose() * cache.a1) / n;
  g.b2 = Eigen::VectorXd::Constant(1, d2.sum() / n);
  g.w1 = (d1.transpose() * x) / n;
  g.b1 = d1.colwise().sum().transpose() / n;
  return g;
}

Eigen::VectorXd PerExampleGradNorms(const NNParams& params, const ForwardCache& cache,
                                    const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::VectorXd d2 = cache.y_hat - y;
  const Eigen::MatrixXd d1 =
      ((d2 * params.w2).array() * (cache.z1.array() > 0.0).cast<double>()).matrix();
  const Eigen::VectorXd x_sq = x.rowwise().squaredNorm().array() + 1.0;
  const Eigen::VectorXd a_sq = cache.a1.rowwise().squaredNorm().array() + 1.0;
  const Eigen::VectorXd sq =
      d2.array().square() * a_sq.array() + d1.rowwise().squaredNorm().array() * x_sq.array();
  return sq.cwiseSqrt();
}

NNParams ClippedGradient(const NNParams& params, const Eigen::MatrixXd& x,
                         const Eigen::VectorXd& y, const GradientClipSpec& clip) {
  if (!(clip.clip_norm > 0.0)) throw Error(ErrorCode::kParameter, "clip norm must be positive");
  const ForwardCache cache = NNForward(params, x);
  const Eigen::VectorXd norms = PerExampleGradNorms(params, cache, x, y);
  Eigen::VectorXd scale(norms.size());
  for (Eigen::Index n = 0; n < norms.size(); ++n) {
    scale(n) = norms(n) > clip.clip_norm ? clip.clip_norm / norms(n) : 1.0;
    if (scale(n) * norms(n) > clip.clip_norm * (1.0 + 1e-12)) {
      throw Error(ErrorCode::kBoundViolation, "clipped example gradient exceeds C");
    }
  }
  return NNBackward(params, cache, x, y, &scale);
}

double Accuracy(const NNParams& params, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const ForwardCache cache = NNForward(params, x);
  int correct = 0;
  for (Eigen::Index n = 0; n < y.size(); ++n) {
    if ((cache.y_hat(n) >= 0.5 ? 1.0 : 0.0) == y(n)) ++correct;
  }
  return 100.0 * correct / static_cast<double>(y.size());
}

const char* GdModeName(GdMode mode) {
  switch (mode) {
    case GdMode::kNonPrivate:
      return "non-priv";
    case GdMode::kConventional:
      return "conv";
    case GdMode::kCape:
      return "cape";
  }
  return "unknown";
}

DistributedGdResult DistributedDpGd(const std::vector<ClassSite>& sites, const ClassSite& test,
                                    const DistributedGdConfig& config, const Rng& rng) {
  if (sites.empty()) throw Error(ErrorCode::kParameter, "no sites");
  const int num_sites = static_cast<int>(sites.size());
  if (config.mode == GdMode::kCape && num_sites < 2) {
    throw Error(ErrorCode::kParameter, "CAPE needs at least 2 sites");
  }
  const int dim = static_cast<int>(sites.front().x.cols());
  Rng init_rng = rng.Stream(kInitStream);
  DistributedGdResult result;
  result.params = NNParams::Init(dim, config.hidden, init_rng);
  const ClassSite train = PoolSites(sites);

  const PrivacyBudget budget(config.epsilon, config.delta);
  std::vector<NoiseScale> tau(num_sites);
  for (int s = 0; s < num_sites; ++s) {
    const bool noisy = config.mode != GdMode::kNonPrivate && !config.disable_noise;
    const int n_s = static_cast<int>(sites[s].x.rows());
    if (n_s == 0) throw Error(ErrorCode::kData, "empty site");
    tau[s] = noisy ? GaussianTau(Sensitivity(config.clip.Sensitivity(n_s)), budget)
                   : NoiseScale(0.0);
  }
  result.tau_site = tau.front().tau();
  const int threshold = config.threshold > 0 ? config.threshold : DefaultThreshold(num_sites);
  const Participation all = Participation::AllActive(num_sites);

  for (int it = 0; it < config.iterations; ++it) {
    std::vector<std::vector<double>> local(num_sites);
    for (int s = 0; s < num_sites; ++s) {
      local[s] = ClippedGradient(result.params, sites[s].x, sites[s].y, config.clip).Flatten();
    }
    const Rng iter_rng = rng.Stream({kIterStream, static_cast<std::uint64_t>(it)});
    AggregateResult agg;
    try {
      agg = config.mode == GdMode::kCape
                ? CapeAggregate(local, tau, all, threshold, iter_rng)
                : ConventionalAggregate(local, tau, all, iter_rng);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDropoutThreshold) throw;
      ++result.aborted_iterations;
      continue;
    }
    std::vector<double> flat = result.params.Flatten();
    for (std::size_t k = 0; k < flat.size(); ++k) flat[k] -= config.learning_rate * agg.aggregate[k];
    result.params.Assign(flat);
    if (config.trace_every > 0 && (it + 1) % config.trace_every == 0 &&
        it + 1 != config.iterations) {
      result.trace.push_back(MakeTrace(it + 1, result.params, train, test));
    }
  }
  result.trace.push_back(MakeTrace(config.iterations, result.params, train, test));
  return result;
}

NNParams CentralizedGd(const ClassSite& data, const DistributedGdConfig& config, const Rng& rng) {
  Rng init_rng = rng.Stream(kInitStream);
  NNParams params = NNParams::Init(static_cast<int>(data.x.cols()), config.hidden, init_rng);
  for (int it = 0; it < config.iterations; ++it) {
    const std::vector<double> g = ClippedGradient(params, data.x, data.y, config.clip).Flatten();
    std::vector<double> flat = params.Flatten();
    for (std::size_t k = 0; k < flat.size(); ++k) flat[k] -= config.learning_rate * g[k];
    params.Assign(flat);
  }
  return params;
}

double GradientCheck(const NNParams& params, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     double h) {
  const std::vector<double> analytic = NNBackward(params, NNForward(params, x), x, y).Flatten();
  const std::vector<double> base = params.Flatten();
  NNParams probe = params;
  double worst = 0.0;
  for (std::size_t k = 0; k < base.size(); ++k) {
    std::vector<double> flat = base;
    flat[k] = base[k] + h;
    probe.Assign(flat);
    const double up = CrossEntropy(NNForward(probe, x).y_hat, y);
    flat[k] = base[k] - h;
    probe.Assign(flat);
    const double down = CrossEntropy(NNForward(probe, x).y_hat, y);
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(numeric), std::abs(analytic[k]), 1e-4});
    worst = std::max(worst, std::abs(numeric - analytic[k]) / scale);
  }
  return worst;
}

}  // namespace cape
