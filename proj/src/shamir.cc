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

#include "cape/shamir.h"

#include <sstream>
#include <vector>

#include "cape/error.h"

namespace cape {

ShareSet ShareSecret(const PrimeField& field, const FieldVector& secret, int threshold,
                     int num_parties, Rng& rng) {
  if (threshold < 1 || threshold > num_parties ||
      static_cast<std::uint64_t>(num_parties) >= field.modulus()) {
    std::ostringstream msg;
    msg << "need 1 <= t <= n < lambda, got t = " << threshold << ", n = " << num_parties;
    throw Error(ErrorCode::kParameter, msg.str());
  }
  const std::size_t dim = secret.dim();
  // coeffs[k][c]: coefficient of x^k for coordinate c.
  std::vector<std::vector<std::uint64_t>> coeffs(threshold, std::vector<std::uint64_t>(dim));
  for (std::size_t c = 0; c < dim; ++c) coeffs[0][c] = field.Reduce(secret.elems[c]);
  for (int k = 1; k < threshold; ++k) {
    for (std::size_t c = 0; c < dim; ++c) coeffs[k][c] = field.Random(rng);
  }

  ShareSet set;
  set.threshold = threshold;
  set.num_parties = num_parties;
  for (int party = 1; party <= num_parties; ++party) {
    const auto x = static_cast<std::uint64_t>(party);
    FieldVector share;
    share.elems.resize(dim);
    for (std::size_t c = 0; c < dim; ++c) {
      // Horner.
      std::uint64_t acc = 0;
      for (int k = threshold - 1; k >= 0; --k) acc = field.Add(field.Mul(acc, x), coeffs[k][c]);
      share.elems[c] = acc;
    }
    set.shares.emplace(party, std::move(share));
  }
  return set;
}

FieldVector ReconstructSecret(const PrimeField& field, const std::map<int, FieldVector>& shares,
                              int threshold) {
  if (threshold < 1 || static_cast<int>(shares.size()) < threshold) {
    std::ostringstream msg;
    msg << "have " << shares.size() << " shares, need " << threshold;
    throw Error(ErrorCode::kInsufficientShares, msg.str());
  }
  std::vector<std::uint64_t> xs;
  std::vector<const FieldVector*> ys;
  for (const auto& [party, share] : shares) {
    if (party < 1 || static_cast<std::uint64_t>(party) >= field.modulus()) {
      throw Error(ErrorCode::kParameter, "share index outside [1, lambda)");
    }
    xs.push_back(static_cast<std::uint64_t>(party));
    ys.push_back(&share);
    if (static_cast<int>(xs.size()) == threshold) break;
  }
  const std::size_t dim = ys.front()->dim();
  for (const FieldVector* y : ys) {
    if (y->dim() != dim) throw Error(ErrorCode::kDimensionMismatch, "shares differ in length");
  }

  // Lagrange basis at zero: prod_{m != k} x_m / (x_m - x_k).
  std::vector<std::uint64_t> basis(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    std::uint64_t num = 1;
    std::uint64_t den = 1;
    for (std::size_t m = 0; m < xs.size(); ++m) {
      if (m == k) continue;
      num = field.Mul(num, xs[m]);
      den = field.Mul(den, field.Sub(xs[m], xs[k]));
    }
    basis[k] = field.Mul(num, field.Inv(den));
  }

  FieldVector secret;
  secret.elems.assign(dim, 0);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    for (std::size_t c = 0; c < dim; ++c) {
      secret.elems[c] = field.Add(secret.elems[c], field.Mul(basis[k], ys[k]->elems[c]));
    }
  }
  return secret;
}

}  // namespace cape
