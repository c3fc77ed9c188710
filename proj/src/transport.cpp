/*
 * Copyright 2026 The vflsa Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "vflsa/transport.hpp"

#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "vflsa/error.hpp"
#include "vflsa/wire.hpp"

namespace vflsa {

std::string_view tag_name(Tag tag) {
  switch (tag) {
    case Tag::PubKeyRequest: return "PubKeyRequest";
    case Tag::PubKeySet: return "PubKeySet";
    case Tag::PubKeyForward: return "PubKeyForward";
    case Tag::EncryptedBatch: return "EncryptedBatch";
    case Tag::WeightSlice: return "WeightSlice";
    case Tag::Labels: return "Labels";
    case Tag::MaskedActivation: return "MaskedActivation";
    case Tag::Delta: return "Delta";
    case Tag::MaskedGradient: return "MaskedGradient";
    case Tag::GradientForward: return "GradientForward";
    case Tag::Prediction: return "Prediction";
    case Tag::Ack: return "Ack";
  }
  return "Unknown";
}

std::string_view phase_name(Phase phase) { return phase == Phase::Training ? "training" : "testing"; }

std::string_view party_kind_name(PartyKind kind) {
  switch (kind) {
    case PartyKind::Active: return "active";
    case PartyKind::Passive: return "passive";
    case PartyKind::Aggregator: return "aggregator";
  }
  return "?";
}

Bytes Envelope::encode() const {
  Bytes out;
  out.reserve(frame_size());
  wire::put_u8(out, static_cast<std::uint8_t>(tag));
  wire::put_u16(out, sender);
  wire::put_u16(out, receiver);
  wire::put_u32(out, epoch);
  wire::put_u32(out, round);
  wire::put_u32(out, static_cast<std::uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Envelope Envelope::decode(std::span<const std::uint8_t> frame) {
  wire::Reader in(frame);
  Envelope e;
  const std::uint8_t tag = in.u8();
  if (tag < static_cast<std::uint8_t>(Tag::PubKeyRequest) || tag > static_cast<std::uint8_t>(Tag::Ack)) {
    throw Error(Errc::MalformedFrame, "unknown tag " + std::to_string(tag));
  }
  e.tag = static_cast<Tag>(tag);
  e.sender = in.u16();
  e.receiver = in.u16();
  e.epoch = in.u32();
  e.round = in.u32();
  const std::uint32_t len = in.u32();
  auto body = in.take(len);
  e.payload.assign(body.begin(), body.end());
  if (!in.done()) throw Error(Errc::MalformedFrame, "trailing bytes after payload");
  return e;
}

// ---------------------------------------------------------------------------

void TrafficMeter::record(PartyIndex party, Phase phase, Direction direction, Tag tag, std::size_t bytes) {
  auto& cell = cells_[Key{party, phase, direction, tag}];
  cell.messages += 1;
  cell.bytes += bytes;
}

void TrafficMeter::add_cpu(PartyIndex party, Phase phase, std::chrono::nanoseconds elapsed) {
  cpu_[{party, phase}] += elapsed;
}

std::uint64_t TrafficMeter::bytes(PartyIndex party, Phase phase, Direction direction) const {
  std::uint64_t total = 0;
  for (const auto& [key, cell] : cells_) {
    if (key.party == party && key.phase == phase && key.direction == direction) total += cell.bytes;
  }
  return total;
}

std::uint64_t TrafficMeter::bytes(PartyIndex party, Phase phase) const {
  return bytes(party, phase, Direction::Sent) + bytes(party, phase, Direction::Received);
}

std::uint64_t TrafficMeter::total(Direction direction) const {
  std::uint64_t total = 0;
  for (const auto& [key, cell] : cells_)
    if (key.direction == direction) total += cell.bytes;
  return total;
}

double TrafficMeter::cpu_ms(PartyIndex party, Phase phase) const {
  auto it = cpu_.find({party, phase});
  if (it == cpu_.end()) return 0.0;
  return std::chrono::duration<double, std::milli>(it->second).count();
}

void TrafficMeter::clear() {
  cells_.clear();
  cpu_.clear();
}

// ---------------------------------------------------------------------------

Network::Network(std::vector<PartyIndex> parties) {
  for (PartyIndex p : parties) inboxes_[p];
}

std::map<PartyIndex, std::deque<Network::Queued>>::iterator Network::inbox(PartyIndex party) {
  auto it = inboxes_.find(party);
  if (it == inboxes_.end()) throw Error(Errc::UnknownParty, "party " + std::to_string(party) + " is not registered");
  return it;
}

DeliveryReceipt Network::send(const Envelope& envelope) {
  std::lock_guard lock(mu_);
  if (closed_) throw Error(Errc::ChannelClosed, "network is closed");
  inbox(envelope.sender);
  auto dest = inbox(envelope.receiver);
  if (envelope.sender != kAggregator && envelope.receiver != kAggregator) {
    throw Error(Errc::ProtocolViolation, "clients " + std::to_string(envelope.sender) + " and " +
                                             std::to_string(envelope.receiver) +
                                             " may only communicate through the aggregator");
  }
  Queued q{next_sequence_++, envelope.sender, envelope.tag, envelope.encode()};
  const std::size_t size = q.frame.size();
  meter_.record(envelope.sender, phase_, Direction::Sent, envelope.tag, size);
  if (logging_) log_.push_back(LoggedFrame{q.sequence, phase_, envelope});
  const std::uint64_t seq = q.sequence;
  dest->second.push_back(std::move(q));
  return DeliveryReceipt{seq, size};
}

std::optional<Envelope> Network::try_recv(PartyIndex party, const RecvFilter& filter) {
  std::lock_guard lock(mu_);
  if (closed_) throw Error(Errc::ChannelClosed, "network is closed");
  auto& queue = inbox(party)->second;
  for (auto it = queue.begin(); it != queue.end(); ++it) {
    if (filter.tag && it->tag != *filter.tag) continue;
    if (filter.sender && it->sender != *filter.sender) continue;
    Envelope e = Envelope::decode(it->frame);
    meter_.record(party, phase_, Direction::Received, e.tag, it->frame.size());
    queue.erase(it);
    return e;
  }
  return std::nullopt;
}

Envelope Network::recv(PartyIndex party, const RecvFilter& filter) {
  auto e = try_recv(party, filter);
  if (!e) {
    std::string what = "party " + std::to_string(party) + " has no pending message";
    if (filter.tag) what += " tagged " + std::string(tag_name(*filter.tag));
    if (filter.sender) what += " from " + std::to_string(*filter.sender);
    throw Error(Errc::MissingMessage, what);
  }
  return std::move(*e);
}

std::size_t Network::pending(PartyIndex party) const {
  std::lock_guard lock(mu_);
  auto it = inboxes_.find(party);
  return it == inboxes_.end() ? 0 : it->second.size();
}

std::size_t Network::pending() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& [p, q] : inboxes_) n += q.size();
  return n;
}

void Network::close() {
  std::lock_guard lock(mu_);
  closed_ = true;
}

bool Network::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

void Network::set_phase(Phase phase) {
  std::lock_guard lock(mu_);
  phase_ = phase;
}

Phase Network::phase() const {
  std::lock_guard lock(mu_);
  return phase_;
}

void Network::set_logging(bool enabled) {
  std::lock_guard lock(mu_);
  logging_ = enabled;
}

std::vector<LoggedFrame> Network::log() const {
  std::lock_guard lock(mu_);
  return log_;
}

void Network::clear_log() {
  std::lock_guard lock(mu_);
  log_.clear();
}

std::string log_to_jsonl(std::span<const LoggedFrame> log) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (const auto& f : log) {
    std::string hex;
    hex.reserve(f.envelope.payload.size() * 2);
    for (std::uint8_t b : f.envelope.payload) {
      hex.push_back(kHex[b >> 4]);
      hex.push_back(kHex[b & 15]);
    }
    nlohmann::json j = {{"seq", f.sequence},
                        {"phase", phase_name(f.phase)},
                        {"tag", tag_name(f.envelope.tag)},
                        {"sender", f.envelope.sender},
                        {"receiver", f.envelope.receiver},
                        {"epoch", f.envelope.epoch},
                        {"round", f.envelope.round},
                        {"payload_len", f.envelope.payload.size()},
                        {"payload", hex}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct KindTotals {
  double bytes = 0.0;
  double cpu_ms = 0.0;
};

std::map<std::pair<PartyKind, Phase>, KindTotals> per_kind(const SessionMetrics& m) {
  std::map<std::pair<PartyKind, Phase>, KindTotals> out;
  std::map<PartyKind, int> counts;
  for (const auto& [party, kind] : m.kinds) counts[kind] += 1;
  for (Phase phase : {Phase::Training, Phase::Testing}) {
    for (const auto& [party, kind] : m.kinds) {
      auto& t = out[{kind, phase}];
      t.bytes += static_cast<double>(m.meter.bytes(party, phase)) / counts[kind];
      t.cpu_ms += m.meter.cpu_ms(party, phase) / counts[kind];
    }
  }
  return out;
}

}  // namespace

std::vector<MetricsRow> snapshot_metrics(const SessionMetrics& run, const SessionMetrics* baseline) {
  if (!baseline) throw Error(Errc::MissingBaseline, "overhead columns need a plain-mode run with the same seed");
  const auto secured = per_kind(run);
  const auto plain = per_kind(*baseline);
  std::vector<MetricsRow> rows;
  for (PartyKind kind : {PartyKind::Active, PartyKind::Passive, PartyKind::Aggregator}) {
    for (Phase phase : {Phase::Training, Phase::Testing}) {
      auto s = secured.find({kind, phase});
      if (s == secured.end()) continue;
      auto p = plain.find({kind, phase});
      const KindTotals base = p == plain.end() ? KindTotals{} : p->second;
      rows.push_back(MetricsRow{kind, phase, s->second.bytes, s->second.bytes - base.bytes, s->second.cpu_ms,
                                s->second.cpu_ms - base.cpu_ms});
    }
  }
  return rows;
}

std::string metrics_to_csv(std::span<const MetricsRow> rows) {
  std::ostringstream out;
  out << "party,phase,total_bytes,overhead_bytes,cpu_ms,overhead_ms\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.1f,%.1f,%.3f,%.3f\n", std::string(party_kind_name(r.kind)).c_str(),
                  std::string(phase_name(r.phase)).c_str(), r.total_bytes, r.overhead_bytes, r.cpu_ms,
                  r.overhead_ms);
    out << buf;
  }
  return out.str();
}

}  // namespace vflsa
