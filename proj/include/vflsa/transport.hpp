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

#pragma once

// In-process star network with byte-exact framing and per-party accounting.
//
// Frame layout (all integers little-endian):
//
//   tag u8 | sender u16 | receiver u16 | epoch u32 | round u32 | payload_len u32 | payload
//
// so an empty payload costs exactly 17 bytes on the wire.

#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vflsa/crypto.hpp"

namespace vflsa {

enum class Tag : std::uint8_t {
  PubKeyRequest = 1,
  PubKeySet = 2,
  PubKeyForward = 3,
  EncryptedBatch = 4,
  WeightSlice = 5,
  Labels = 6,
  MaskedActivation = 7,
  Delta = 8,
  MaskedGradient = 9,
  GradientForward = 10,
  Prediction = 11,
  Ack = 12,
};

std::string_view tag_name(Tag tag);

inline constexpr PartyIndex kAggregator = 0xFFFF;
inline constexpr std::size_t kFrameHeaderBytes = 17;

struct Envelope {
  Tag tag = Tag::Ack;
  PartyIndex sender = 0;
  PartyIndex receiver = 0;
  std::uint32_t epoch = 0;
  std::uint32_t round = 0;
  Bytes payload;

  std::size_t frame_size() const { return kFrameHeaderBytes + payload.size(); }
  Bytes encode() const;
  // Throws Errc::MalformedFrame on truncation, trailing bytes or unknown tags.
  static Envelope decode(std::span<const std::uint8_t> frame);

  friend bool operator==(const Envelope&, const Envelope&) = default;
};

enum class Phase : std::uint8_t { Training = 0, Testing = 1 };
enum class Direction : std::uint8_t { Sent = 0, Received = 1 };

std::string_view phase_name(Phase phase);

struct TrafficCell {
  std::uint64_t messages = 0;
  std::uint64_t bytes = 0;
};

class TrafficMeter {
 public:
  struct Key {
    PartyIndex party;
    Phase phase;
    Direction direction;
    Tag tag;
    auto operator<=>(const Key&) const = default;
  };

  void record(PartyIndex party, Phase phase, Direction direction, Tag tag, std::size_t bytes);
  void add_cpu(PartyIndex party, Phase phase, std::chrono::nanoseconds elapsed);

  std::uint64_t bytes(PartyIndex party, Phase phase) const;  // sent + received
  std::uint64_t bytes(PartyIndex party, Phase phase, Direction direction) const;
  std::uint64_t total(Direction direction) const;
  double cpu_ms(PartyIndex party, Phase phase) const;

  const std::map<Key, TrafficCell>& cells() const { return cells_; }
  void clear();

 private:
  std::map<Key, TrafficCell> cells_;
  std::map<std::pair<PartyIndex, Phase>, std::chrono::nanoseconds> cpu_;
};

// Adds the wall time of its scope to one party's CPU account.
class CpuScope {
 public:
  CpuScope(TrafficMeter& meter, PartyIndex party, Phase phase)
      : meter_(meter), party_(party), phase_(phase), start_(std::chrono::steady_clock::now()) {}
  ~CpuScope() { meter_.add_cpu(party_, phase_, std::chrono::steady_clock::now() - start_); }
  CpuScope(const CpuScope&) = delete;
  CpuScope& operator=(const CpuScope&) = delete;

 private:
  TrafficMeter& meter_;
  PartyIndex party_;
  Phase phase_;
  std::chrono::steady_clock::time_point start_;
};

struct DeliveryReceipt {
  std::uint64_t sequence = 0;
  std::size_t frame_bytes = 0;
};

struct RecvFilter {
  std::optional<Tag> tag;
  std::optional<PartyIndex> sender;
};

struct LoggedFrame {
  std::uint64_t sequence = 0;
  Phase phase = Phase::Training;
  Envelope envelope;
};

// Reliable, ordered delivery between registered parties. Clients talk only to
// the aggregator. Sending is safe from several threads; each inbox has a
// single consumer.
class Network {
 public:
  explicit Network(std::vector<PartyIndex> parties);

  // Errc::UnknownParty, Errc::ChannelClosed, Errc::ProtocolViolation (client to client).
  DeliveryReceipt send(const Envelope& envelope);
  std::optional<Envelope> try_recv(PartyIndex party, const RecvFilter& filter = {});
  // Errc::MissingMessage when nothing matching is queued.
  Envelope recv(PartyIndex party, const RecvFilter& filter = {});
  std::size_t pending(PartyIndex party) const;
  std::size_t pending() const;

  void close();
  bool closed() const;

  void set_phase(Phase phase);
  Phase phase() const;

  void set_logging(bool enabled);
  std::vector<LoggedFrame> log() const;
  void clear_log();

  TrafficMeter& meter() { return meter_; }
  const TrafficMeter& meter() const { return meter_; }

 private:
  struct Queued {
    std::uint64_t sequence;
    PartyIndex sender;
    Tag tag;
    Bytes frame;
  };

  std::map<PartyIndex, std::deque<Queued>>::iterator inbox(PartyIndex party);

  mutable std::mutex mu_;
  std::map<PartyIndex, std::deque<Queued>> inboxes_;
  std::uint64_t next_sequence_ = 0;
  bool closed_ = false;
  bool logging_ = false;
  Phase phase_ = Phase::Training;
  std::vector<LoggedFrame> log_;
  TrafficMeter meter_;
};

// One JSON object per frame: seq, phase, tag, sender, receiver, epoch,
// round, payload_len and the payload in hex.
std::string log_to_jsonl(std::span<const LoggedFrame> log);

// ---------------------------------------------------------------------------
// metrics

enum class PartyKind { Active, Passive, Aggregator };

std::string_view party_kind_name(PartyKind kind);

struct SessionMetrics {
  std::map<PartyIndex, PartyKind> kinds;
  TrafficMeter meter;
};

struct MetricsRow {
  PartyKind kind = PartyKind::Active;
  Phase phase = Phase::Training;
  // Passive rows are means over the passive parties.
  double total_bytes = 0.0;
  double overhead_bytes = 0.0;
  double cpu_ms = 0.0;
  double overhead_ms = 0.0;
};

// Overhead = secured - baseline, per cell. Throws Errc::MissingBaseline when no
// baseline run is supplied.
std::vector<MetricsRow> snapshot_metrics(const SessionMetrics& run, const SessionMetrics* baseline);

// Header: party,phase,total_bytes,overhead_bytes,cpu_ms,overhead_ms
std::string metrics_to_csv(std::span<const MetricsRow> rows);

}  // namespace vflsa
