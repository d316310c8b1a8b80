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

#include <algorithm>
#include <map>
#include <sstream>

#include "cape/error.h"
#include "cape/shamir.h"

namespace cape {
namespace {

// Key-agreement base. Toy Diffie-Hellman in Z_p^*: functionally a key
// agreement, cryptographically meaningless at this size.
constexpr std::uint64_t kGenerator = 37;

// Stream ids below the caller's round stream.
enum StreamTag : std::uint64_t { kKeyStream = 1, kShareStream = 2, kNoiseStream = 3, kQuantStream = 4 };

std::vector<std::uint64_t> ExpandMask(const PrimeField& field, std::uint64_t seed, std::size_t dim) {
  Rng prg(seed);
  std::vector<std::uint64_t> mask(dim);
  for (auto& m : mask) m = field.Random(prg);
  return mask;
}

void Record(const RoundContext& ctx, int from, int to, MessageKind kind,
            std::vector<std::uint64_t> field_payload, std::vector<double> real_payload = {}) {
  if (ctx.transcript == nullptr) return;
  Message m;
  m.round = ctx.round;
  m.from = from;
  m.to = to;
  m.kind = kind;
  m.scalar_count = static_cast<std::int64_t>(field_payload.size() + real_payload.size());
  m.field_payload = std::move(field_payload);
  m.real_payload = std::move(real_payload);
  ctx.transcript->Append(std::move(m));
}

}  // namespace

int DefaultThreshold(int num_sites) { return (2 * num_sites) / 3 + 1; }

int Participation::num_active() const {
  return static_cast<int>(std::count(dropped.begin(), dropped.end(), false));
}

FieldVector SecureSum(const PrimeField& field, const std::vector<FieldVector>& per_site_values,
                      int threshold, const Participation& participation, const Rng& rng,
                      const RoundContext& ctx) {
  const int num_sites = static_cast<int>(per_site_values.size());
  if (num_sites < 1) throw Error(ErrorCode::kParameter, "secure sum needs at least one site");
  if (participation.num_sites() != num_sites) {
    throw Error(ErrorCode::kParameter, "participation does not match the site count");
  }
  if (threshold < 1 || threshold > num_sites) {
    throw Error(ErrorCode::kParameter, "threshold must lie in [1, S]");
  }
  const int num_active = participation.num_active();
  if (num_active < threshold) {
    std::ostringstream msg;
    msg << num_active << " active sites, threshold is " << threshold;
    throw Error(ErrorCode::kDropoutThreshold, msg.str());
  }
  const std::size_t dim = per_site_values.front().dim();
  for (const auto& v : per_site_values) {
    if (v.dim() != dim) throw Error(ErrorCode::kDimensionMismatch, "site vectors differ in length");
  }

  // Key registration.
  std::vector<std::uint64_t> secret(num_sites);
  std::vector<std::uint64_t> pub(num_sites);
  for (int s = 0; s < num_sites; ++s) {
    Rng key_rng = rng.Stream({kKeyStream, static_cast<std::uint64_t>(s)});
    secret[s] = 1 + key_rng.UniformBelow(field.modulus() - 2);
    pub[s] = field.Pow(kGenerator, secret[s]);
    Record(ctx, s, kAggregator, MessageKind::kPublicKey, {pub[s]});
  }
  for (int s = 0; s < num_sites; ++s) {
    Record(ctx, kAggregator, s, MessageKind::kPublicKeyBroadcast, pub);
  }

  // Each site shares its key secret; held[j][s] is site j's share of s.
  std::vector<std::map<int, std::uint64_t>> held(num_sites);
  for (int s = 0; s < num_sites; ++s) {
    Rng share_rng = rng.Stream({kShareStream, static_cast<std::uint64_t>(s)});
    const ShareSet set = ShareSecret(field, FieldVector{{secret[s]}}, threshold, num_sites, share_rng);
    for (const auto& [party, share] : set.shares) {
      const int j = party - 1;
      held[j][s] = share.elems[0];
      if (j != s) Record(ctx, s, j, MessageKind::kKeyShare, {share.elems[0]});
    }
  }

  // Masked uploads. Site s adds +PRG(k_sj) for j > s and -PRG(k_sj) for j < s.
  std::vector<std::uint64_t> total(dim, 0);
  for (int s = 0; s < num_sites; ++s) {
    if (!participation.active(s)) continue;
    std::vector<std::uint64_t> masked(per_site_values[s].elems);
    for (auto& x : masked) x = field.Reduce(x);
    for (int j = 0; j < num_sites; ++j) {
      if (j == s) continue;
      const auto mask = ExpandMask(field, field.Pow(pub[j], secret[s]), dim);
      for (std::size_t c = 0; c < dim; ++c) {
        masked[c] = j > s ? field.Add(masked[c], mask[c]) : field.Sub(masked[c], mask[c]);
      }
    }
    Record(ctx, s, kAggregator, MessageKind::kMaskedInput, masked);
    for (std::size_t c = 0; c < dim; ++c) total[c] = field.Add(total[c], masked[c]);
  }

  // Unmasking: recover dropped sites' secrets and strip the dangling masks.
  std::vector<std::uint64_t> dropped_ids;
  for (int s = 0; s < num_sites; ++s) {
    if (!participation.active(s)) dropped_ids.push_back(static_cast<std::uint64_t>(s));
  }
  if (!dropped_ids.empty()) {
    std::vector<std::map<int, FieldVector>> collected(num_sites);
    for (int j = 0; j < num_sites; ++j) {
      if (!participation.active(j)) continue;
      Record(ctx, kAggregator, j, MessageKind::kDropoutNotice, dropped_ids);
      std::vector<std::uint64_t> shares_out;
      for (std::uint64_t u : dropped_ids) {
        const std::uint64_t share = held[j].at(static_cast<int>(u));
        shares_out.push_back(share);
        collected[u][j + 1] = FieldVector{{share}};
      }
      Record(ctx, j, kAggregator, MessageKind::kUnmaskShare, shares_out);
    }
    for (std::uint64_t uid : dropped_ids) {
      const int u = static_cast<int>(uid);
      const std::uint64_t sk_u = ReconstructSecret(field, collected[u], threshold).elems[0];
      for (int v = 0; v < num_sites; ++v) {
        if (!participation.active(v)) continue;
        // Active v applied +mask if u > v, -mask if u < v.
        const auto mask = ExpandMask(field, field.Pow(pub[v], sk_u), dim);
        for (std::size_t c = 0; c < dim; ++c) {
          total[c] = u > v ? field.Sub(total[c], mask[c]) : field.Add(total[c], mask[c]);
        }
      }
    }
  }
  return FieldVector{std::move(total)};
}

ZeroSumNoise GenerateZeroSumNoise(const std::vector<NoiseScale>& tau_per_site, std::size_t dim,
                                  int threshold, const Participation& participation, const Rng& rng,
                                  const RoundContext& ctx, const PrimeField& field) {
  const int num_sites = static_cast<int>(tau_per_site.size());
  if (num_sites < 2) throw Error(ErrorCode::kParameter, "zero-sum noise needs S >= 2");
  if (participation.num_sites() != num_sites) {
    throw Error(ErrorCode::kParameter, "participation does not match the site count");
  }
  double tau_max = 0.0;
  for (const auto& t : tau_per_site) tau_max = std::max(tau_max, t.tau());
  const QuantizationSpec spec = QuantizationSpec::ForNoise(tau_max, num_sites, field);

  ZeroSumNoise out{{}, {}, {}, {}, spec, 0};
  out.e.resize(num_sites);
  out.e_hat.resize(num_sites);
  out.e_field.resize(num_sites);

  std::vector<std::vector<std::int64_t>> ticks(num_sites);
  std::vector<FieldVector> encoded(num_sites, FieldVector{std::vector<std::uint64_t>(dim, 0)});
  for (int s = 0; s < num_sites; ++s) {
    if (!participation.active(s)) continue;
    Rng noise_rng = rng.Stream({kNoiseStream, static_cast<std::uint64_t>(s)});
    Rng quant_rng = rng.Stream({kQuantStream, static_cast<std::uint64_t>(s)});
    ticks[s].resize(dim);
    out.e_hat[s].resize(dim);
    for (std::size_t c = 0; c < dim; ++c) {
      const double draw = tau_per_site[s].tau() * noise_rng.Normal();
      ticks[s][c] = QuantizeTicks(draw, spec, quant_rng);
      encoded[s].elems[c] = field.FromSigned(ticks[s][c]);
      out.e_hat[s][c] = static_cast<double>(ticks[s][c]) / spec.scale();
    }
  }

  const FieldVector sum = SecureSum(field, encoded, threshold, participation, rng, ctx);
  const int num_active = participation.num_active();
  out.num_active = num_active;
  std::vector<std::int64_t> sum_ticks(dim);
  out.broadcast_sum.resize(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    sum_ticks[c] = field.ToSigned(sum.elems[c]);
    out.broadcast_sum[c] = Dequantize(sum.elems[c], spec);
  }

  const double denom = static_cast<double>(num_active) * spec.scale();
  for (int s = 0; s < num_sites; ++s) {
    if (!participation.active(s)) continue;
    Record(ctx, kAggregator, s, MessageKind::kNoiseSumBroadcast, {}, out.broadcast_sum);
    out.e[s].resize(dim);
    out.e_field[s].elems.resize(dim);
    for (std::size_t c = 0; c < dim; ++c) {
      const std::int64_t units = num_active * ticks[s][c] - sum_ticks[c];
      out.e_field[s].elems[c] = field.FromSigned(units);
      out.e[s][c] = static_cast<double>(units) / denom;
    }
  }
  return out;
}

}  // namespace cape
