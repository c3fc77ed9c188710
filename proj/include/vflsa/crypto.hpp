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

// Key agreement, key derivation, sample-ID encryption and the mask PRG.
//
// X25519 for Diffie-Hellman, HKDF-SHA256 for epoch keys, ChaCha20-Poly1305
// (IETF) for sample IDs and raw ChaCha20 keystream for the PRG. All backed by
// libsodium.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vflsa/ring.hpp"

namespace vflsa {

using Bytes = std::vector<std::uint8_t>;
using Key32 = std::array<std::uint8_t, 32>;
using Nonce12 = std::array<std::uint8_t, 12>;
using PartyIndex = std::uint16_t;
using SampleId = std::uint64_t;

inline constexpr std::size_t kAeadTagBytes = 16;

// Throws on failure to initialise libsodium. Safe to call repeatedly.
void ensure_crypto_initialized();

struct KeyPair {
  Key32 secret_key{};
  Key32 public_key{};
};

// Deterministic in `entropy`; the scalar is clamped by the curve convention,
// so every 32-byte seed is a valid secret key.
KeyPair generate_keypair(const Key32& entropy);
// Seeded from the operating system.
KeyPair generate_keypair();

// Validates a wire encoding of a public key. Rejects wrong lengths,
// non-canonical field elements and the small-order points that force an
// all-zero shared secret.
Key32 parse_public_key(std::span<const std::uint8_t> encoded);

struct SharedSecret {
  Key32 bytes{};
  // Unordered pair, stored as (low, high).
  PartyIndex low = 0;
  PartyIndex high = 0;
};

SharedSecret derive_shared_secret(const KeyPair& own, PartyIndex own_index, const Key32& peer_public_key,
                                  PartyIndex peer_index);

struct EpochKeys {
  std::uint32_t epoch = 0;
  Key32 sym_key{};   // "id-enc"
  Key32 prg_seed{};  // "mask-prg"
};

EpochKeys derive_epoch_keys(const SharedSecret& secret, std::uint32_t epoch);

// RFC 5869 HKDF with HMAC-SHA256. Output length at most 255 * 32 bytes.
Bytes hkdf_sha256(std::span<const std::uint8_t> ikm, std::span<const std::uint8_t> salt,
                  std::span<const std::uint8_t> info, std::size_t length);

enum class NoncePhase : std::uint8_t { Training = 1, Testing = 2 };

// 12-byte nonce: epoch(4) | round(4) | phase(1) | sender(1) | position(2),
// little-endian. Unique per (key, message) as long as each sender encrypts at
// most one message per batch position in a round.
Nonce12 make_nonce(std::uint32_t epoch, std::uint32_t round, NoncePhase phase, std::uint8_t sender,
                   std::uint16_t position);

struct EncryptedIdBatch {
  std::uint16_t cluster_id = 0;
  Nonce12 nonce{};
  Bytes ciphertext;  // AEAD output, tag included

  // nonce || ciphertext
  Bytes to_wire() const;
  static EncryptedIdBatch from_wire(std::uint16_t cluster_id, std::span<const std::uint8_t> wire);
  std::size_t wire_size() const { return nonce.size() + ciphertext.size(); }
};

// ID lists serialize as a u32 count followed by u64 values, all little-endian.
Bytes serialize_ids(std::span<const SampleId> ids);
std::vector<SampleId> deserialize_ids(std::span<const std::uint8_t> bytes);

EncryptedIdBatch encrypt_sample_ids(const Key32& key, std::span<const SampleId> ids, const Nonce12& nonce,
                                    std::uint16_t cluster_id = 0);
inline EncryptedIdBatch encrypt_sample_ids(const EpochKeys& keys, std::span<const SampleId> ids,
                                           const Nonce12& nonce, std::uint16_t cluster_id = 0) {
  return encrypt_sample_ids(keys.sym_key, ids, nonce, cluster_id);
}

// Throws Errc::AuthenticationFailed when the batch was not sealed under `key`.
std::vector<SampleId> decrypt_sample_ids(const Key32& key, const EncryptedIdBatch& batch);
inline std::vector<SampleId> decrypt_sample_ids(const EpochKeys& keys, const EncryptedIdBatch& batch) {
  return decrypt_sample_ids(keys.sym_key, batch);
}
// Non-throwing variant for the selective-decryption path.
std::optional<std::vector<SampleId>> try_decrypt_sample_ids(const Key32& key, const EncryptedIdBatch& batch);

// Selects an independent keystream under one seed. Different stream ids never
// overlap; the all-zero id is the default stream.
using PrgStreamId = Nonce12;

// `count` uniform ring elements from the ChaCha20 keystream of (seed, stream).
// Element k is little-endian bytes [8k, 8k + 8) of the keystream, so a longer
// expansion extends a shorter one.
RingVector prg_expand(const Key32& seed, std::size_t count, const PrgStreamId& stream = {});

}  // namespace vflsa
