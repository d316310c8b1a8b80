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

#include "cape/field.h"

#include <cmath>
#include <sstream>

#include "cape/error.h"

namespace cape {

bool IsPrime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  auto mulmod = [n](std::uint64_t a, std::uint64_t b) {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % n);
  };
  auto powmod = [&](std::uint64_t b, std::uint64_t e) {
    std::uint64_t r = 1;
    b %= n;
    while (e) {
      if (e & 1) r = mulmod(r, b);
      b = mulmod(b, b);
      e >>= 1;
    }
    return r;
  };
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // Deterministic Miller-Rabin witnesses for 64-bit inputs.
  for (std::uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    std::uint64_t x = powmod(a, d);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < s; ++i) {
      x = mulmod(x, x);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

PrimeField::PrimeField(std::uint64_t modulus) : p_(modulus) {
  if (modulus >= (std::uint64_t{1} << 63) || !IsPrime(modulus)) {
    throw Error(ErrorCode::kParameter, "field modulus must be a prime below 2^63");
  }
}

std::uint64_t PrimeField::Mul(std::uint64_t a, std::uint64_t b) const {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % p_);
}

std::uint64_t PrimeField::Pow(std::uint64_t base, std::uint64_t exp) const {
  std::uint64_t result = 1 % p_;
  base %= p_;
  while (exp) {
    if (exp & 1) result = Mul(result, base);
    base = Mul(base, base);
    exp >>= 1;
  }
  return result;
}

std::uint64_t PrimeField::Inv(std::uint64_t a) const {
  if (a % p_ == 0) throw Error(ErrorCode::kParameter, "zero has no inverse");
  return Pow(a, p_ - 2);
}

std::uint64_t PrimeField::FromSigned(std::int64_t v) const {
  const auto p = static_cast<std::int64_t>(p_);
  std::int64_t r = v % p;
  if (r < 0) r += p;
  return static_cast<std::uint64_t>(r);
}

std::int64_t PrimeField::ToSigned(std::uint64_t a) const {
  return a > p_ / 2 ? -static_cast<std::int64_t>(p_ - a) : static_cast<std::int64_t>(a);
}

FieldVector AddVectors(const PrimeField& field, const FieldVector& a, const FieldVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "field vectors differ in length");
  }
  FieldVector out;
  out.elems.resize(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) out.elems[i] = field.Add(a.elems[i], b.elems[i]);
  return out;
}

QuantizationSpec::QuantizationSpec(double scale, double clip_bound, PrimeField field)
    : scale_(scale), clip_bound_(clip_bound), field_(field) {
  if (!(scale > 0.0) || !(clip_bound > 0.0)) {
    throw Error(ErrorCode::kParameter, "quantization scale and clip bound must be positive");
  }
  if (!(scale * clip_bound < static_cast<double>(field.modulus()) / 2.0)) {
    throw Error(ErrorCode::kParameter, "scale * clip_bound must stay below lambda / 2");
  }
}

QuantizationSpec QuantizationSpec::ForNoise(double tau_max, int num_terms, PrimeField field) {
  const double clip = tau_max > 0.0 ? 1e6 * tau_max : 1.0;
  const double half = static_cast<double>(field.modulus()) / 2.0;
  double scale = 4294967296.0;  // 2^32
  const double terms = std::max(num_terms, 1);
  while (scale > 0x1.0p-30 && !(2.0 * terms * scale * clip < half)) scale /= 2.0;
  return QuantizationSpec(scale, clip, field);
}

std::int64_t QuantizeTicks(double x, const QuantizationSpec& spec, Rng& rng) {
  if (!(std::abs(x) <= spec.clip_bound())) {
    std::ostringstream msg;
    msg << "|" << x << "| exceeds clip bound " << spec.clip_bound();
    throw Error(ErrorCode::kRange, msg.str());
  }
  const double scaled = x * spec.scale();
  const double lower = std::floor(scaled);
  const double frac = scaled - lower;
  auto ticks = static_cast<std::int64_t>(lower);
  if (frac > 0.0 && rng.Uniform01() < frac) ++ticks;
  return ticks;
}

std::uint64_t Quantize(double x, const QuantizationSpec& spec, Rng& rng) {
  return spec.field().FromSigned(QuantizeTicks(x, spec, rng));
}

double Dequantize(std::uint64_t v, const QuantizationSpec& spec) {
  return static_cast<double>(spec.field().ToSigned(v)) / spec.scale();
}

}  // namespace cape
