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

#include "cape/dataset.h"

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "cape/error.h"

namespace cape {
namespace {

std::string WriteTemp(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << body;
  return path.string();
}

void ExpectNormalized(const Eigen::MatrixXd& x) {
  EXPECT_LE(x.cwiseAbs().maxCoeff(), 1.0 + 1e-12);
  EXPECT_LE(x.rowwise().norm().maxCoeff(), 1.0 + 1e-12);
}

TEST(SyntheticRegressionTest, NoiseFreeRecoversWTrue) {
  const RegressionData d = GenSyntheticRegression(10, 500, 0.0, 3);
  const Eigen::VectorXd w = d.data.x.colPivHouseholderQr().solve(d.data.y);
  EXPECT_LT((w - d.w_true).norm(), 1e-8 * (1.0 + d.w_true.norm()));
}

TEST(SyntheticRegressionTest, NormalizationSweep) {
  for (int i = 0; i < 100; ++i) {
    const int dim = 1 + i % 13;
    const int n = 2 + 7 * i;
    const RegressionData d = GenSyntheticRegression(dim, n, 0.2, 100 + i);
    ExpectNormalized(d.data.x);
    EXPECT_LE(d.data.y.cwiseAbs().maxCoeff(), 1.0 + 1e-12);
  }
}

TEST(SyntheticRegressionTest, Deterministic) {
  const RegressionData a = GenSyntheticRegression(5, 50, 0.1, 9);
  const RegressionData b = GenSyntheticRegression(5, 50, 0.1, 9);
  EXPECT_EQ(a.data.x, b.data.x);
  EXPECT_EQ(a.data.y, b.data.y);
  EXPECT_EQ(a.w_true, b.w_true);
}

TEST(SyntheticClassesTest, BalancedAndSplit) {
  const ClassData d = GenSyntheticClasses(4, 1001, 1.0, 5);
  EXPECT_EQ(d.train.x.rows(), 801);
  EXPECT_EQ(d.test.x.rows(), 200);
  const double pos = d.train.y.sum() + d.test.y.sum();
  EXPECT_LE(std::abs(pos - (1001 - pos)), 1.0);
}

TEST(SyntheticClassesTest, MeanGapAlongDiagonal) {
  const ClassData d = GenSyntheticClasses(9, 20000, 2.0, 6);
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(9), m0 = Eigen::VectorXd::Zero(9);
  int n1 = 0, n0 = 0;
  for (Eigen::Index r = 0; r < d.train.x.rows(); ++r) {
    if (d.train.y(r) == 1.0) {
      m1 += d.train.x.row(r).transpose();
      ++n1;
    } else {
      m0 += d.train.x.row(r).transpose();
      ++n0;
    }
  }
  const Eigen::VectorXd gap = m1 / n1 - m0 / n0;
  EXPECT_NEAR(gap.norm(), 2.0, 0.1);
  EXPECT_NEAR(gap.sum() / 3.0, 2.0, 0.1);  // (1,...,1)/sqrt(9) direction
}

TEST(LoadCsvTest, HandNormalizedMatrix) {
  const std::string path = WriteTemp("cape_csv_hand.csv",
                                     "a,b,y\n"
                                     "0,10,1\n"
                                     "1,10,-2\n"
                                     "2,10,4\n"
                                     "3,10,0\n"
                                     "4,10,2\n");
  const DatasetBundle d = LoadCsv(path, "y", LossSpec{});
  ASSERT_EQ(d.num_samples(), 5);
  ASSERT_EQ(d.dim(), 2);
  // a -> {-1, -0.5, 0, 0.5, 1}; constant b -> 0; max row norm 1.
  const double expected[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  for (int r = 0; r < 5; ++r) {
    EXPECT_DOUBLE_EQ(d.x(r, 0), expected[r]);
    EXPECT_EQ(d.x(r, 1), 0.0);
  }
  EXPECT_DOUBLE_EQ(d.report.l2_scale, 1.0);
  EXPECT_DOUBLE_EQ(d.report.y_scale, 4.0);
  EXPECT_DOUBLE_EQ(d.y(1), -0.5);
}

TEST(LoadCsvTest, L2ScalingStep) {
  const std::string path = WriteTemp("cape_csv_l2.csv", "a,b,y\n0,0,0\n1,1,1\n");
  const DatasetBundle d = LoadCsv(path, "y", LossSpec{});
  EXPECT_DOUBLE_EQ(d.report.l2_scale, std::sqrt(2.0));
  EXPECT_NEAR(d.x(0, 0), -1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(d.x(1, 1), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(LoadCsvTest, MissingRowsCounted) {
  const std::string path = WriteTemp("cape_csv_missing.csv", "a,y\n1,1\n,0\n?,1\n3,0\n");
  const DatasetBundle d = LoadCsv(path, "y", LossSpec{LossKind::kLogisticRegression});
  EXPECT_EQ(d.num_samples(), 2);
  EXPECT_EQ(d.report.rejected_rows, 2);
}

TEST(LoadCsvTest, Errors) {
  const auto code = [](const std::string& path, const std::string& target) {
    try {
      LoadCsv(path, target, LossSpec{});
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kParameter;
  };
  EXPECT_EQ(code(WriteTemp("cape_csv_empty.csv", ""), "y"), ErrorCode::kData);
  EXPECT_EQ(code(WriteTemp("cape_csv_header.csv", "a,y\n"), "y"), ErrorCode::kData);
  EXPECT_EQ(code(WriteTemp("cape_csv_text.csv", "a,y\nfoo,1\n"), "y"), ErrorCode::kData);
  EXPECT_EQ(code(WriteTemp("cape_csv_target.csv", "a,b\n1,2\n"), "y"), ErrorCode::kData);
  try {
    LoadCsv(WriteTemp("cape_csv_label.csv", "a,y\n1,2\n"), "y",
            LossSpec{LossKind::kLogisticRegression});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kData);
  }
}

TEST(SplitSitesTest, EqualBlocksDropRemainder) {
  Eigen::MatrixXd x(23, 2);
  Eigen::VectorXd y(23);
  for (int i = 0; i < 23; ++i) {
    x.row(i) << i, -i;
    y(i) = i;
  }
  Rng rng(1);
  SiteData kept;
  const auto sites = SplitSites(x, y, 5, rng, &kept);
  ASSERT_EQ(sites.size(), 5u);
  std::vector<int> seen;
  for (const auto& s : sites) {
    EXPECT_EQ(s.num_samples(), 4);
    for (int i = 0; i < 4; ++i) {
      EXPECT_EQ(s.x(i, 0), s.y(i));
      seen.push_back(static_cast<int>(s.y(i)));
    }
  }
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(std::unique(seen.begin(), seen.end()), seen.end());
  EXPECT_EQ(kept.num_samples(), 20);
}

TEST(SubsampleTest, SizeAndMembership) {
  const RegressionData d = GenSyntheticRegression(3, 100, 0.1, 2);
  Rng rng(4);
  const DatasetBundle s = Subsample(d.data, 30, rng);
  EXPECT_EQ(s.num_samples(), 30);
  for (int i = 0; i < 30; ++i) {
    bool found = false;
    for (int j = 0; j < 100 && !found; ++j) found = d.data.y(j) == s.y(i) && d.data.x.row(j) == s.x.row(i);
    EXPECT_TRUE(found);
  }
}

}  // namespace
}  // namespace cape
