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

#ifndef CAPE_FIELD_H_
#define CAPE_FIELD_H_

#include <cstdint>
#include <vector>

#include "cape/rng.h"

namespace cape {

// 2^61 - 1, the production modulus.
inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

// Arithmetic in Z_p for a prime p < 2^63. Elements are canonical residues in
// [0, p).
class PrimeField {
 public:
  explicit PrimeField(std::uint64_t modulus = kMersenne61);

  std::uint64_t modulus() const { return p_; }

  std::uint64_t Reduce(std::uint64_t x) const { return x % p_; }
  std::uint64_t Add(std::uint64_t a, std::uint64_t b) const {
    const std::uint64_t s = a + b;
    return s >= p_ ? s - p_ : s;
  }
  std::uint64_t Sub(std::uint64_t a, std::uint64_t b) const {
    return a >= b ? a - b : a + (p_ - b);
  }
  std::uint64_t Neg(std::uint64_t a) const { return a == 0 ? 0 : p_ - a; }
  std::uint64_t Mul(std::uint64_t a, std::uint64_t b) const;
  std::uint64_t Pow(std::uint64_t base, std::uint64_t exp) const;
  // Multiplicative inverse; a must be nonzero.
  std::uint64_t Inv(std::uint64_t a) const;

  // Residue of a signed integer.
  std::uint64_t FromSigned(std::int64_t v) const;
  // Centered representative in (-p/2, p/2].
  std::int64_t ToSigned(std::uint64_t a) const;

  std::uint64_t Random(Rng& rng) const { return rng.UniformBelow(p_); }

  bool operator==(const PrimeField&) const = default;

 private:
  std::uint64_t p_;
};

bool IsPrime(std::uint64_t n);

struct FieldVector {
  std::vector<std::uint64_t> elems;

  std::size_t dim() const { return elems.size(); }
  bool operator==(const FieldVector&) const = default;
};

FieldVector AddVectors(const PrimeField& field, const FieldVector& a, const FieldVector& b);

// Stochastic fixed-point mapping R -> Z_lambda. `scale` field ticks per real
// unit; reals beyond +/- clip_bound are rejected. scale * clip_bound < p / 2.
class QuantizationSpec {
 public:
  QuantizationSpec(double scale, double clip_bound, PrimeField field = PrimeField());

  // Defaults for noise of scale `tau_max` summed over `num_terms` parties:
  // clip_bound = 1e6 * tau_max (1 when tau_max = 0) and scale = 2^32, halved
  // until 2 * num_terms * scale * clip_bound < p / 2 so sums cannot wrap.
  static QuantizationSpec ForNoise(double tau_max, int num_terms,
                                   PrimeField field = PrimeField());

  double scale() const { return scale_; }
  double clip_bound() const { return clip_bound_; }
  const PrimeField& field() const { return field_; }

 private:
  double scale_;
  double clip_bound_;
  PrimeField field_;
};

// Unbiased stochastic rounding of x * scale to a neighbouring integer, as a
// field element. Throws kRange when |x| > clip_bound.
std::uint64_t Quantize(double x, const QuantizationSpec& spec, Rng& rng);
// Integer tick count behind Quantize (before field reduction).
std::int64_t QuantizeTicks(double x, const QuantizationSpec& spec, Rng& rng);
// Centered residue divided by scale.
double Dequantize(std::uint64_t v, const QuantizationSpec& spec);

}  // namespace cape

#endif  // CAPE_FIELD_H_
