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

#include "cape/transcript.h"

#include <cstdio>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>

#include "cape/error.h"
#include "json.hpp"

namespace cape {
namespace {

constexpr MessageKind kAllKinds[] = {
    MessageKind::kPublicKey,     MessageKind::kPublicKeyBroadcast, MessageKind::kKeyShare,
    MessageKind::kMaskedInput,   MessageKind::kDropoutNotice,      MessageKind::kUnmaskShare,
    MessageKind::kNoiseSumBroadcast, MessageKind::kRelease,
};

std::string PartyName(int id) {
  return id == kAggregator ? std::string("aggregator") : "site:" + std::to_string(id);
}

int ParseParty(const std::string& name) {
  if (name == "aggregator") return kAggregator;
  if (name.rfind("site:", 0) == 0) return std::stoi(name.substr(5));
  throw Error(ErrorCode::kData, "unknown party '" + name + "'");
}

}  // namespace

const char* MessageKindName(MessageKind kind) {
  switch (kind) {
    case MessageKind::kPublicKey:
      return "public_key";
    case MessageKind::kPublicKeyBroadcast:
      return "public_key_broadcast";
    case MessageKind::kKeyShare:
      return "key_share";
    case MessageKind::kMaskedInput:
      return "masked_input";
    case MessageKind::kDropoutNotice:
      return "dropout_notice";
    case MessageKind::kUnmaskShare:
      return "unmask_share";
    case MessageKind::kNoiseSumBroadcast:
      return "noise_sum_broadcast";
    case MessageKind::kRelease:
      return "release";
  }
  return "unknown";
}

std::string Message::PayloadDigest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (std::uint64_t v : field_payload) feed(&v, sizeof v);
  for (double v : real_payload) feed(&v, sizeof v);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::int64_t CostReport::total_site_scalars() const {
  return std::accumulate(per_site_scalars.begin(), per_site_scalars.end(), std::int64_t{0});
}

std::vector<Message> Transcript::AggregatorMessages() const {
  std::vector<Message> out;
  for (const Message& m : messages_) {
    if (m.from == kAggregator || m.to == kAggregator) out.push_back(m);
  }
  return out;
}

CostReport Transcript::Cost(int num_sites) const {
  CostReport report;
  report.num_sites = num_sites;
  report.per_site_messages.assign(num_sites, 0);
  report.per_site_scalars.assign(num_sites, 0);
  for (const Message& m : messages_) {
    if (m.from >= 0 && m.from < num_sites) {
      report.per_site_messages[m.from] += 1;
      report.per_site_scalars[m.from] += m.scalar_count;
    }
    if (m.to == kAggregator) report.aggregator_scalars_received += m.scalar_count;
    if (m.from == kAggregator) report.aggregator_scalars_sent += m.scalar_count;
  }
  return report;
}

void Transcript::WriteNdjson(std::ostream& out) const {
  for (const Message& m : messages_) {
    nlohmann::ordered_json line;
    line["round"] = m.round;
    line["from"] = PartyName(m.from);
    line["to"] = PartyName(m.to);
    line["kind"] = MessageKindName(m.kind);
    line["payload_digest"] = m.PayloadDigest();
    line["scalar_count"] = m.scalar_count;
    out << line.dump() << '\n';
  }
}

std::vector<Message> Transcript::ReadNdjson(std::istream& in) {
  std::vector<Message> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    Message m;
    m.round = j.at("round").get<std::uint64_t>();
    m.from = ParseParty(j.at("from").get<std::string>());
    m.to = ParseParty(j.at("to").get<std::string>());
    const auto kind = j.at("kind").get<std::string>();
    bool found = false;
    for (MessageKind k : kAllKinds) {
      if (kind == MessageKindName(k)) {
        m.kind = k;
        found = true;
      }
    }
    if (!found) throw Error(ErrorCode::kData, "unknown message kind '" + kind + "'");
    m.scalar_count = j.at("scalar_count").get<std::int64_t>();
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace cape
