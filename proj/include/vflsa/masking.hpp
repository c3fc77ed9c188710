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

// Fixed-point embedding of reals into Z/2^64 and pairwise cancelling masks.
//
// Party i's mask is  n_i = -sum_{j<i} PRG(s_ij) + sum_{j>i} PRG(s_ij),  so the
// masks of all participants in one aggregate sum to zero exactly.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "vflsa/crypto.hpp"
#include "vflsa/ring.hpp"

namespace vflsa {

struct FixedPointCodec {
  int scale_bits = 24;
  // Upper bound on the number of encoded values that are ever summed.
  std::uint64_t max_summands = 64;

  // Largest magnitude accepted by encode (exclusive).
  double limit() const;

  // Throws Errc::RangeOverflow outside (-limit, limit) or for non-finite x.
  RingElement encode(double x) const;
  double decode(RingElement e) const;

  RingVector encode(std::span<const double> xs) const;
  std::vector<double> decode(std::span<const RingElement> es) const;
};

enum class MaskDirection : std::uint8_t { Forward = 1, Backward = 2 };

// Selects the PRG slice a mask is drawn from. Distinct contexts never share
// stream bytes, so a mask is never reused.
struct MaskContext {
  std::uint32_t epoch = 0;
  std::uint32_t round = 0;
  MaskDirection direction = MaskDirection::Forward;
  NoncePhase phase = NoncePhase::Training;

  PrgStreamId stream_id() const;
};

struct MaskVector {
  RingVector elements;
  PartyIndex owner = 0;
  std::uint32_t epoch = 0;
  std::uint32_t round = 0;
};

// `participants` lists every party contributing to the aggregate (owner
// included). Throws Errc::MissingPeer if a participant other than `owner` has
// no seed.
MaskVector compute_mask(PartyIndex owner, std::span<const PartyIndex> participants,
                        const std::map<PartyIndex, Key32>& peer_seeds, std::size_t length, const MaskContext& ctx);

// Participants are taken to be the owner plus every key of `peer_seeds`.
MaskVector compute_mask(PartyIndex owner, const std::map<PartyIndex, Key32>& peer_seeds, std::size_t length,
                        const MaskContext& ctx);

// output[k] = encode(plain[k]) + mask[k]
RingVector mask_values(std::span<const double> plain, const FixedPointCodec& codec, const MaskVector& mask);

// Elementwise sum mod 2^64; every contribution must have the same length.
RingVector sum_masked(std::span<const RingVector> contributions);

}  // namespace vflsa
