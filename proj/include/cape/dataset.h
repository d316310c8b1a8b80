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

#ifndef CAPE_DATASET_H_
#define CAPE_DATASET_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cape/cape_fm.h"
#include "cape/functional_mechanism.h"
#include "cape/nn.h"
#include "cape/rng.h"

namespace cape {

struct NormalizationReport {
  std::vector<double> feature_min;  // raw range per feature
  std::vector<double> feature_max;
  double l2_scale = 1.0;            // rows divided by this after range mapping
  double y_scale = 1.0;             // responses divided by this
  int rejected_rows = 0;            // rows with missing values
};

struct DatasetBundle {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  NormalizationReport report;

  int num_samples() const { return static_cast<int>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }
};

// Maps each feature to [-1, 1] by its range (constant features to 0), then
// divides every row by the largest row norm.
NormalizationReport NormalizeFeatures(Eigen::MatrixXd* x);

struct RegressionData {
  DatasetBundle data;
  Eigen::VectorXd w_true;
};

// X ~ N(0, I), normalized; y = X w* + N(0, noise_sd^2), divided by max|y|.
// w_true is the OLS fit to the noise-free responses on the same scale.
RegressionData GenSyntheticRegression(int dim, int num_samples, double noise_sd,
                                      std::uint64_t seed);

struct ClassData {
  ClassSite train;
  ClassSite test;
};

// Two balanced unit-variance Gaussian classes whose means differ by
// `separation` along (1, ..., 1) / sqrt(D); seeded 80/20 split.
ClassData GenSyntheticClasses(int dim, int num_samples, double separation, std::uint64_t seed,
                              double train_fraction = 0.8);

// Header row required. Rows with empty or NaN cells are dropped and counted;
// other non-numeric cells are an error. Features are normalized as above;
// linear targets are divided by max|y|, logistic targets must be 0/1.
DatasetBundle LoadCsv(const std::string& path, const std::string& target_column,
                      const LossSpec& spec);

// Uniform subsample without replacement.
DatasetBundle Subsample(const DatasetBundle& data, int num_samples, Rng& rng);

// Seeded shuffle, then S equal blocks; the remainder is dropped. `kept`
// receives the pooled rows actually used when non-null.
std::vector<SiteData> SplitSites(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int num_sites,
                                 Rng& rng, SiteData* kept = nullptr);

}  // namespace cape

#endif  // CAPE_DATASET_H_
