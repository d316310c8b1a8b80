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

#ifndef CAPE_EXPERIMENT_H_
#define CAPE_EXPERIMENT_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cape/functional_mechanism.h"
#include "json.hpp"

namespace cape {

enum class ExperimentKind { kLinreg, kNn, kDeltaCompare, kCollusionSweep, kHRatio };

const char* ExperimentKindName(ExperimentKind kind);
ExperimentKind ParseExperimentKind(const std::string& name);

struct DataSource {
  std::string kind = "synthetic";  // "synthetic" or "csv"
  std::string csv_path;
  std::string target_column;
  double noise_sd = 0.1;
  double separation = 1.0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kLinreg;
  std::string axis = "epsilon";  // linreg: epsilon, N, delta; nn: epsilon; delta-compare: tau
  std::vector<double> grid;

  int num_sites = 5;
  int dim = 20;
  int num_samples = 10000;
  double epsilon = 1.0;
  double delta = 1e-5;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> modes;
  LossKind loss = LossKind::kLinearRegression;
  DataSource data;

  // nn
  int hidden = 12;
  int iterations = 200;
  double learning_rate = 0.1;
  double clip_norm = 1.0;

  // delta-compare and collusion-sweep
  std::vector<int> site_counts;
  std::vector<double> epsilons;
  int samples_per_site = 100;

  // h-ratio
  int compositions = 1000;

  bool write_transcript = false;

  // Defaults for a given experiment kind.
  static ExperimentConfig Defaults(ExperimentKind kind);

  nlohmann::json ToJson() const;
  // Fields absent from `j` keep the kind's defaults.
  static ExperimentConfig FromJson(const nlohmann::json& j);
  // Throws kParameter naming the first bad field.
  void Validate() const;
};

// One row per (grid point, seed, mode, metric). Fields that do not apply to
// an experiment are NaN and written as empty cells.
struct ExperimentRecord {
  std::string experiment;
  std::string panel;
  std::string axis;
  double x = 0.0;
  std::string mode;
  std::uint64_t seed = 0;
  double num_sites = 0.0;
  double dim = 0.0;
  double num_samples = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  double tau = 0.0;
  double num_colluders = 0.0;
  std::string metric;
  double value = 0.0;
};

struct SummaryRow {
  std::string panel;
  double x = 0.0;
  std::string mode;
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;
  int n_seeds = 0;
};

struct InvariantCheck {
  std::string name;
  bool passed = true;
  bool asserted = true;  // trend checks are reported but not asserted
  std::string detail;
};

struct ExperimentOutput {
  std::vector<ExperimentRecord> records;
  std::vector<SummaryRow> summary;
  std::vector<InvariantCheck> checks;
  std::vector<std::string> cell_errors;
  std::string transcript_ndjson;

  bool ok() const;
  // Mean of `metric` for (panel, x, mode); NaN when absent.
  double Mean(const std::string& panel, double x, const std::string& mode,
              const std::string& metric) const;
};

ExperimentOutput RunExperiment(const ExperimentConfig& config);

// Mean and sample sd per (panel, x, mode, metric), in first-seen order.
std::vector<SummaryRow> Summarize(const std::vector<ExperimentRecord>& records);

// Evaluation metrics.
double ParameterError(const Eigen::VectorXd& w_true, const Eigen::VectorXd& w_hat);
double SpearmanRho(const std::vector<double>& a, const std::vector<double>& b);

void WriteRecordsCsv(const std::vector<ExperimentRecord>& records, std::ostream& out);
void WriteSummaryCsv(const std::vector<SummaryRow>& rows, std::ostream& out);

// Writes records.csv, summary.csv, config.json, checks.csv and, when
// requested, transcript.ndjson into `dir` (created if missing).
void WriteOutputs(const ExperimentConfig& config, const ExperimentOutput& output,
                  const std::string& dir);

}  // namespace cape

#endif  // CAPE_EXPERIMENT_H_
