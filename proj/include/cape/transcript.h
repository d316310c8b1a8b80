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

#ifndef CAPE_TRANSCRIPT_H_
#define CAPE_TRANSCRIPT_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cape {

// Party ids: sites are 0..S-1, the aggregator is kAggregator.
inline constexpr int kAggregator = -1;

enum class MessageKind {
  kPublicKey,           // site -> aggregator, key-agreement public value
  kPublicKeyBroadcast,  // aggregator -> site, all public values
  kKeyShare,            // site -> site, Shamir share of a key secret
  kMaskedInput,         // site -> aggregator, masked field vector
  kDropoutNotice,       // aggregator -> site, ids of dropped sites
  kUnmaskShare,         // site -> aggregator, shares of dropped sites' keys
  kNoiseSumBroadcast,   // aggregator -> site, remapped sum of e-hat
  kRelease,             // site -> aggregator, privatized local value(s)
};

const char* MessageKindName(MessageKind kind);

// One protocol message. Exactly one of field_payload / real_payload is used;
// scalar_count is the number of scalars on the wire.
struct Message {
  std::uint64_t round = 0;
  int from = kAggregator;
  int to = kAggregator;
  MessageKind kind = MessageKind::kRelease;
  std::vector<std::uint64_t> field_payload;
  std::vector<double> real_payload;
  std::int64_t scalar_count = 0;

  // FNV-1a over the payload bytes, hex encoded.
  std::string PayloadDigest() const;
};

struct CostReport {
  int num_sites = 0;
  std::vector<std::int64_t> per_site_messages;  // messages sent by each site
  std::vector<std::int64_t> per_site_scalars;   // scalars sent by each site
  std::int64_t aggregator_scalars_received = 0;
  std::int64_t aggregator_scalars_sent = 0;

  std::int64_t aggregator_scalars() const {
    return aggregator_scalars_received + aggregator_scalars_sent;
  }
  std::int64_t total_site_scalars() const;
};

// Ordered log of every message in a simulation.
class Transcript {
 public:
  void Append(Message message) { messages_.push_back(std::move(message)); }

  const std::vector<Message>& messages() const { return messages_; }
  bool empty() const { return messages_.empty(); }
  void clear() { messages_.clear(); }

  // Messages the aggregator receives or sends.
  std::vector<Message> AggregatorMessages() const;

  CostReport Cost(int num_sites) const;

  // {"round":..,"from":..,"to":..,"kind":..,"payload_digest":..,"scalar_count":..}
  // per line.
  void WriteNdjson(std::ostream& out) const;
  static std::vector<Message> ReadNdjson(std::istream& in);

 private:
  std::vector<Message> messages_;
};

}  // namespace cape

#endif  // CAPE_TRANSCRIPT_H_
