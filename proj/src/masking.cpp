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

#include "vflsa/masking.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vflsa/error.hpp"
#include "vflsa/wire.hpp"

namespace vflsa {

double FixedPointCodec::limit() const {
  return std::ldexp(1.0, 63 - scale_bits) / static_cast<double>(max_summands);
}

RingElement FixedPointCodec::encode(double x) const {
  if (!std::isfinite(x) || std::fabs(x) >= limit()) {
    throw Error(Errc::RangeOverflow, "value " + std::to_string(x) + " outside fixed-point range +/-" +
                                         std::to_string(limit()));
  }
  const auto scaled = static_cast<std::int64_t>(std::llround(std::ldexp(x, scale_bits)));
  return RingElement(static_cast<std::uint64_t>(scaled));
}

double FixedPointCodec::decode(RingElement e) const {
  return std::ldexp(static_cast<double>(static_cast<std::int64_t>(e.value)), -scale_bits);
}

RingVector FixedPointCodec::encode(std::span<const double> xs) const {
  RingVector out(xs.size());
  std::transform(xs.begin(), xs.end(), out.begin(), [this](double x) { return encode(x); });
  return out;
}

std::vector<double> FixedPointCodec::decode(std::span<const RingElement> es) const {
  std::vector<double> out(es.size());
  std::transform(es.begin(), es.end(), out.begin(), [this](RingElement e) { return decode(e); });
  return out;
}

PrgStreamId MaskContext::stream_id() const {
  Bytes b;
  wire::put_u32(b, round);
  wire::put_u32(b, epoch);
  b.push_back(static_cast<std::uint8_t>(direction));
  b.push_back(static_cast<std::uint8_t>(phase));
  PrgStreamId id{};
  std::copy(b.begin(), b.end(), id.begin());
  return id;
}

MaskVector compute_mask(PartyIndex owner, std::span<const PartyIndex> participants,
                        const std::map<PartyIndex, Key32>& peer_seeds, std::size_t length, const MaskContext& ctx) {
  MaskVector mask;
  mask.owner = owner;
  mask.epoch = ctx.epoch;
  mask.round = ctx.round;
  mask.elements.assign(length, RingElement{});
  const PrgStreamId stream = ctx.stream_id();
  for (PartyIndex peer : participants) {
    if (peer == owner) continue;
    auto it = peer_seeds.find(peer);
    if (it == peer_seeds.end()) {
      throw Error(Errc::MissingPeer, "party " + std::to_string(owner) + " has no mask seed shared with party " +
                                         std::to_string(peer));
    }
    const RingVector stream_values = prg_expand(it->second, length, stream);
    if (peer > owner) {
      for (std::size_t k = 0; k < length; ++k) mask.elements[k] += stream_values[k];
    } else {
      for (std::size_t k = 0; k < length; ++k) mask.elements[k] -= stream_values[k];
    }
  }
  return mask;
}

MaskVector compute_mask(PartyIndex owner, const std::map<PartyIndex, Key32>& peer_seeds, std::size_t length,
                        const MaskContext& ctx) {
  std::vector<PartyIndex> participants;
  participants.reserve(peer_seeds.size() + 1);
  participants.push_back(owner);
  for (const auto& [peer, seed] : peer_seeds) participants.push_back(peer);
  return compute_mask(owner, participants, peer_seeds, length, ctx);
}

RingVector mask_values(std::span<const double> plain, const FixedPointCodec& codec, const MaskVector& mask) {
  if (plain.size() != mask.elements.size()) {
    throw Error(Errc::LengthMismatch, "plain length " + std::to_string(plain.size()) + " vs mask length " +
                                          std::to_string(mask.elements.size()));
  }
  RingVector out(plain.size());
  for (std::size_t k = 0; k < plain.size(); ++k) out[k] = codec.encode(plain[k]) + mask.elements[k];
  return out;
}

RingVector sum_masked(std::span<const RingVector> contributions) {
  if (contributions.empty()) return {};
  const std::size_t n = contributions.front().size();
  RingVector total(n);
  for (const auto& c : contributions) {
    if (c.size() != n) {
      throw Error(Errc::LengthMismatch,
                  "contribution of length " + std::to_string(c.size()) + " in aggregate of length " + std::to_string(n));
    }
    for (std::size_t k = 0; k < n; ++k) total[k] += c[k];
  }
  return total;
}

}  // namespace vflsa
