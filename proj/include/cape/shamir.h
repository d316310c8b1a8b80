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

#ifndef CAPE_SHAMIR_H_
#define CAPE_SHAMIR_H_

#include <cstdint>
#include <map>

#include "cape/field.h"
#include "cape/rng.h"

namespace cape {

// Shares of one secret vector. Party i (1-based) holds the evaluation of the
// per-coordinate sharing polynomials at x = i.
struct ShareSet {
  std::map<int, FieldVector> shares;
  int threshold = 1;
  int num_parties = 1;
};

// t-out-of-n Shamir sharing, coordinate-wise, with random degree-(t-1)
// polynomials whose constant term is the secret. Requires 1 <= t <= n < p.
ShareSet ShareSecret(const PrimeField& field, const FieldVector& secret, int threshold,
                     int num_parties, Rng& rng);

// Lagrange interpolation at zero from any `threshold` distinct shares; extra
// shares are ignored. Throws kInsufficientShares with fewer.
FieldVector ReconstructSecret(const PrimeField& field, const std::map<int, FieldVector>& shares,
                              int threshold);
inline FieldVector ReconstructSecret(const PrimeField& field, const ShareSet& set) {
  return ReconstructSecret(field, set.shares, set.threshold);
}

}  // namespace cape

#endif  // CAPE_SHAMIR_H_
