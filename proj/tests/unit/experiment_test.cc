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

#include "cape/experiment.h"

#include <sstream>

#include <gtest/gtest.h>

#include "cape/error.h"

namespace cape {
namespace {

TEST(MetricsTest, ParameterErrorHand) {
  Eigen::VectorXd a(2), b(2);
  a << 1.0, 2.0;
  b << 4.0, 6.0;
  EXPECT_DOUBLE_EQ(ParameterError(a, b), 2.5);
}

TEST(MetricsTest, SpearmanHand) {
  EXPECT_DOUBLE_EQ(SpearmanRho({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(SpearmanRho({1, 2, 3, 4}, {9, 5, 2, 1}), -1.0);
  // One adjacent swap among five: 1 - 6*2/(5*24).
  EXPECT_NEAR(SpearmanRho({1, 2, 3, 4, 5}, {5, 4, 2, 3, 1}), -0.9, 1e-12);
}

TEST(ConfigTest, JsonRoundTrip) {
  ExperimentConfig c = ExperimentConfig::Defaults(ExperimentKind::kNn);
  c.grid = {0.5, 2.0};
  c.seeds = {7, 8};
  c.hidden = 5;
  const ExperimentConfig d = ExperimentConfig::FromJson(c.ToJson());
  EXPECT_EQ(d.ToJson(), c.ToJson());
}

TEST(ConfigTest, ValidateRejects) {
  ExperimentConfig c = ExperimentConfig::Defaults(ExperimentKind::kLinreg);
  c.grid.clear();
  EXPECT_THROW(c.Validate(), Error);
  c = ExperimentConfig::Defaults(ExperimentKind::kLinreg);
  c.seeds.clear();
  EXPECT_THROW(c.Validate(), Error);
  c = ExperimentConfig::Defaults(ExperimentKind::kLinreg);
  c.modes = {"bogus"};
  EXPECT_THROW(c.Validate(), Error);
}

TEST(ConfigTest, CsvDefaultsLooserDelta) {
  nlohmann::json j = {{"experiment", "linreg"},
                      {"data", {{"kind", "csv"}, {"csv_path", "x.csv"}, {"target_column", "y"}}}};
  EXPECT_EQ(ExperimentConfig::FromJson(j).delta, 1e-3);
  EXPECT_EQ(ExperimentConfig::Defaults(ExperimentKind::kLinreg).delta, 1e-5);
  EXPECT_EQ(ExperimentConfig::Defaults(ExperimentKind::kNn).delta, 0.01);
}

ExperimentConfig SmallLinreg() {
  ExperimentConfig c = ExperimentConfig::Defaults(ExperimentKind::kLinreg);
  c.grid = {1.0, 5.0};
  c.seeds = {1, 2};
  c.num_samples = 2000;
  c.dim = 5;
  return c;
}

TEST(RunExperimentTest, LinregSchemaAndDeterminism) {
  const ExperimentConfig c = SmallLinreg();
  const ExperimentOutput a = RunExperiment(c);
  const ExperimentOutput b = RunExperiment(c);
  std::ostringstream sa, sb;
  WriteRecordsCsv(a.records, sa);
  WriteRecordsCsv(b.records, sb);
  EXPECT_EQ(sa.str(), sb.str());
  // 2 grid points x 2 seeds x 6 modes x 3 metrics.
  EXPECT_EQ(a.records.size(), 72u);
  EXPECT_TRUE(a.cell_errors.empty());
  EXPECT_TRUE(a.ok());
  for (const auto& r : a.summary) EXPECT_EQ(r.n_seeds, 2);
  EXPECT_EQ(a.Mean("epsilon", 1.0, "non-priv", "loss"), a.Mean("epsilon", 5.0, "non-priv", "loss"));
}

TEST(RunExperimentTest, ObjPertReportedNotImplemented) {
  ExperimentConfig c = SmallLinreg();
  c.modes = {"non-priv", "objPert"};
  const ExperimentOutput out = RunExperiment(c);
  ASSERT_EQ(out.cell_errors.size(), 4u);
  EXPECT_NE(out.cell_errors.front().find("not implemented"), std::string::npos);
  EXPECT_EQ(out.records.size(), 2u * 2u * 3u);
}

TEST(RunExperimentTest, DeltaCompareHasNoViolations) {
  const ExperimentOutput out = RunExperiment(ExperimentConfig::Defaults(ExperimentKind::kDeltaCompare));
  EXPECT_TRUE(out.ok());
}

TEST(RunExperimentTest, CollusionSweepIncludesZeroColumn) {
  const ExperimentOutput out =
      RunExperiment(ExperimentConfig::Defaults(ExperimentKind::kCollusionSweep));
  EXPECT_TRUE(out.ok());
  bool zero = false;
  for (const auto& r : out.records) zero = zero || r.num_colluders == 0.0;
  EXPECT_TRUE(zero);
}

TEST(RunExperimentTest, HRatioChecksPass) {
  ExperimentConfig c = ExperimentConfig::Defaults(ExperimentKind::kHRatio);
  c.compositions = 200;
  EXPECT_TRUE(RunExperiment(c).ok());
}

TEST(RunExperimentTest, NnSeparationZeroIsChance) {
  ExperimentConfig c = ExperimentConfig::Defaults(ExperimentKind::kNn);
  c.data.separation = 0.0;
  c.modes = {"non-priv"};
  c.grid = {1.0};
  c.seeds = {1};
  c.dim = 10;
  c.num_samples = 2000;
  c.iterations = 100;
  const ExperimentOutput out = RunExperiment(c);
  EXPECT_NEAR(out.Mean("epsilon", 1.0, "non-priv", "test_acc"), 50.0, 5.0);
}

TEST(RunExperimentTest, NnLargeSeparation) {
  ExperimentConfig c = ExperimentConfig::Defaults(ExperimentKind::kNn);
  c.data.separation = 10.0;
  c.modes = {"non-priv"};
  c.grid = {1.0};
  c.seeds = {1};
  c.dim = 10;
  c.num_samples = 2000;
  c.iterations = 100;
  const ExperimentOutput out = RunExperiment(c);
  EXPECT_GE(out.Mean("epsilon", 1.0, "non-priv", "test_acc"), 99.0);
}

}  // namespace
}  // namespace cape
