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

#include "cape/secure_agg.h"

#include <cmath>
#include <vector>

#include "cape/error.h"
#include "gtest/gtest.h"

namespace cape {
namespace {

std::vector<FieldVector> RandomInputs(const PrimeField& f, Rng& rng, int sites, int dim) {
  std::vector<FieldVector> v(sites);
  for (auto& x : v) {
    for (int i = 0; i < dim; ++i) x.elems.push_back(f.Random(rng));
  }
  return v;
}

FieldVector PlainSum(const PrimeField& f, const std::vector<FieldVector>& v,
                     const Participation& p) {
  FieldVector out{std::vector<std::uint64_t>(v[0].dim(), 0)};
  for (int s = 0; s < static_cast<int>(v.size()); ++s) {
    if (p.active(s)) out = AddVectors(f, out, v[s]);
  }
  return out;
}

TEST(SecureAggTest, DefaultThreshold) {
  EXPECT_EQ(DefaultThreshold(3), 3);
  EXPECT_EQ(DefaultThreshold(4), 3);
  EXPECT_EQ(DefaultThreshold(10), 7);
}

TEST(SecureSumTest, ZeroInputs) {
  const PrimeField f;
  Rng rng(1);
  std::vector<FieldVector> zeros(5, FieldVector{{0, 0, 0}});
  EXPECT_EQ(SecureSum(f, zeros, 4, Participation::AllActive(5), rng), (FieldVector{{0, 0, 0}}));
}

TEST(SecureSumTest, MatchesPlainSum) {
  for (std::uint64_t modulus : {std::uint64_t{31}, kMersenne61}) {
    const PrimeField f(modulus);
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
      const int s = 3 + trial % 6;
      const auto inputs = RandomInputs(f, rng, s, 5);
      const Participation all = Participation::AllActive(s);
      EXPECT_EQ(SecureSum(f, inputs, DefaultThreshold(s), all, rng.Stream(trial)),
                PlainSum(f, inputs, all));
    }
  }
}

TEST(SecureSumTest, DropoutsAboveThreshold) {
  const PrimeField f;
  Rng rng(3);
  const int s = 8;
  const auto inputs = RandomInputs(f, rng, s, 6);
  Participation p = Participation::AllActive(s);
  p.dropped[2] = true;
  p.dropped[7] = true;
  Transcript transcript;
  const FieldVector got = SecureSum(f, inputs, 6, p, rng, RoundContext{4, &transcript});
  EXPECT_EQ(got, PlainSum(f, inputs, p));
  int notices = 0;
  for (const Message& m : transcript.messages()) {
    if (m.kind == MessageKind::kDropoutNotice) ++notices;
    EXPECT_EQ(m.round, 4u);
  }
  EXPECT_EQ(notices, 6);
}

TEST(SecureSumTest, BelowThresholdFails) {
  const PrimeField f;
  Rng rng(4);
  const auto inputs = RandomInputs(f, rng, 4, 2);
  Participation p = Participation::AllActive(4);
  p.dropped[0] = true;
  p.dropped[1] = true;
  try {
    SecureSum(f, inputs, 3, p, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDropoutThreshold);
  }
}

TEST(SecureSumTest, AggregatorSeesOnlyMaskedInputs) {
  const PrimeField f;
  Rng rng(5);
  const int s = 5;
  const auto inputs = RandomInputs(f, rng, s, 4);
  Transcript transcript;
  SecureSum(f, inputs, 4, Participation::AllActive(s), rng, RoundContext{0, &transcript});
  for (const Message& m : transcript.AggregatorMessages()) {
    if (m.kind != MessageKind::kMaskedInput) continue;
    EXPECT_NE(FieldVector{m.field_payload}, inputs[m.from]);
  }
}

TEST(SecureSumTest, PerSiteCost) {
  const PrimeField f;
  Rng rng(6);
  const int s = 6, d = 9;
  Transcript transcript;
  SecureSum(f, RandomInputs(f, rng, s, d), 5, Participation::AllActive(s), rng,
            RoundContext{0, &transcript});
  const CostReport cost = transcript.Cost(s);
  for (int i = 0; i < s; ++i) EXPECT_EQ(cost.per_site_scalars[i], 1 + (s - 1) + d);
}

TEST(ZeroSumNoiseTest, ForcedValues) {
  // ê = (1, -1) already sums to zero, so e = ê. Checked through the encoding
  // arithmetic on a fixed draw.
  const PrimeField f;
  Rng rng(7);
  const auto z = GenerateZeroSumNoise({NoiseScale(1.0), NoiseScale(1.0)}, 3, 2,
                                      Participation::AllActive(2), rng);
  for (int c = 0; c < 3; ++c) {
    const double mean = (z.e_hat[0][c] + z.e_hat[1][c]) / 2.0;
    EXPECT_NEAR(z.e[0][c], z.e_hat[0][c] - mean, 1e-12);
    EXPECT_NEAR(z.e[1][c], z.e_hat[1][c] - mean, 1e-12);
  }
}

TEST(ZeroSumNoiseTest, FieldSumIsZeroWithDropout) {
  const PrimeField f;
  Rng rng(8);
  const int s = 6;
  std::vector<NoiseScale> tau(s, NoiseScale(0.3));
  Participation p = Participation::AllActive(s);
  p.dropped[4] = true;
  for (int round = 0; round < 50; ++round) {
    const auto z = GenerateZeroSumNoise(tau, 4, DefaultThreshold(s), p, rng.Stream(round));
    EXPECT_EQ(z.num_active, 5);
    FieldVector sum{std::vector<std::uint64_t>(4, 0)};
    double real_sum = 0.0;
    for (int i = 0; i < s; ++i) {
      if (!p.active(i)) {
        EXPECT_TRUE(z.e[i].empty());
        continue;
      }
      sum = AddVectors(f, sum, z.e_field[i]);
      for (double v : z.e[i]) real_sum += v;
    }
    EXPECT_EQ(sum, (FieldVector{{0, 0, 0, 0}}));
    EXPECT_LE(std::abs(real_sum), 4 * s / z.spec.scale());
  }
}

TEST(ZeroSumNoiseTest, MarginalVarianceAndCovariance) {
  const int s = 4, rounds = 100000;
  Rng rng(9);
  std::vector<NoiseScale> tau(s, NoiseScale(1.0));
  double v0 = 0.0, c01 = 0.0;
  for (int r = 0; r < rounds; ++r) {
    const auto z = GenerateZeroSumNoise(tau, 1, 3, Participation::AllActive(s), rng.Stream(r));
    v0 += z.e[0][0] * z.e[0][0];
    c01 += z.e[0][0] * z.e[1][0];
  }
  EXPECT_NEAR(v0 / rounds / 0.75, 1.0, 0.02);
  EXPECT_NEAR(c01 / rounds, -0.25, 0.015);
}

}  // namespace
}  // namespace cape
