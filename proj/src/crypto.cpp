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

#include "vflsa/crypto.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstring>

#include "vflsa/error.hpp"
#include "vflsa/wire.hpp"

namespace vflsa {

namespace {

constexpr std::string_view kEpochSalt = "vflsa/epoch-kdf/v1";
constexpr std::string_view kIdEncContext = "id-enc";
constexpr std::string_view kMaskPrgContext = "mask-prg";

std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

bool is_canonical(const Key32& pk) {
  if (pk[31] & 0x80) return false;
  // Reject 2^255 - 19 <= value < 2^255.
  if (pk[31] != 0x7f) return true;
  for (int i = 30; i >= 1; --i) {
    if (pk[i] != 0xff) return true;
  }
  return pk[0] < 0xed;
}

std::array<std::uint8_t, 2> cluster_ad(std::uint16_t cluster_id) {
  return {static_cast<std::uint8_t>(cluster_id & 0xff), static_cast<std::uint8_t>(cluster_id >> 8)};
}

}  // namespace

void ensure_crypto_initialized() {
  static const int status = sodium_init();
  if (status < 0) throw std::runtime_error("libsodium initialisation failed");
}

KeyPair generate_keypair(const Key32& entropy) {
  ensure_crypto_initialized();
  KeyPair kp;
  kp.secret_key = entropy;
  if (crypto_scalarmult_curve25519_base(kp.public_key.data(), kp.secret_key.data()) != 0) {
    throw std::runtime_error("X25519 base-point multiplication failed");
  }
  return kp;
}

KeyPair generate_keypair() {
  ensure_crypto_initialized();
  Key32 entropy;
  randombytes_buf(entropy.data(), entropy.size());
  return generate_keypair(entropy);
}

Key32 parse_public_key(std::span<const std::uint8_t> encoded) {
  ensure_crypto_initialized();
  if (encoded.size() != 32) {
    throw Error(Errc::InvalidPublicKey, "public key must be 32 bytes, got " + std::to_string(encoded.size()));
  }
  Key32 pk;
  std::copy(encoded.begin(), encoded.end(), pk.begin());
  if (!is_canonical(pk)) throw Error(Errc::InvalidPublicKey, "non-canonical point encoding");
  // A clamped scalar is a multiple of the cofactor, so the product vanishes
  // exactly for the small-order points.
  Key32 probe{};
  probe[0] = 8;
  Key32 out;
  if (crypto_scalarmult_curve25519(out.data(), probe.data(), pk.data()) != 0) {
    throw Error(Errc::InvalidPublicKey, "small-order point");
  }
  return pk;
}

SharedSecret derive_shared_secret(const KeyPair& own, PartyIndex own_index, const Key32& peer_public_key,
                                  PartyIndex peer_index) {
  const Key32 pk = parse_public_key(peer_public_key);
  SharedSecret ss;
  if (crypto_scalarmult_curve25519(ss.bytes.data(), own.secret_key.data(), pk.data()) != 0) {
    throw Error(Errc::InvalidPublicKey, "shared secret is the identity");
  }
  ss.low = std::min(own_index, peer_index);
  ss.high = std::max(own_index, peer_index);
  return ss;
}

Bytes hkdf_sha256(std::span<const std::uint8_t> ikm, std::span<const std::uint8_t> salt,
                  std::span<const std::uint8_t> info, std::size_t length) {
  ensure_crypto_initialized();
  constexpr std::size_t kHash = crypto_auth_hmacsha256_BYTES;
  if (length > 255 * kHash) throw std::invalid_argument("HKDF output too long");

  // Extract. An empty salt is a string of HashLen zeros.
  std::array<std::uint8_t, kHash> zero_salt{};
  std::array<std::uint8_t, kHash> prk;
  crypto_auth_hmacsha256_state st;
  if (salt.empty()) {
    crypto_auth_hmacsha256_init(&st, zero_salt.data(), zero_salt.size());
  } else {
    crypto_auth_hmacsha256_init(&st, salt.data(), salt.size());
  }
  crypto_auth_hmacsha256_update(&st, ikm.data(), ikm.size());
  crypto_auth_hmacsha256_final(&st, prk.data());

  // Expand.
  Bytes okm;
  okm.reserve(length);
  std::array<std::uint8_t, kHash> block{};
  std::size_t block_len = 0;
  for (std::uint8_t counter = 1; okm.size() < length; ++counter) {
    crypto_auth_hmacsha256_init(&st, prk.data(), prk.size());
    crypto_auth_hmacsha256_update(&st, block.data(), block_len);
    crypto_auth_hmacsha256_update(&st, info.data(), info.size());
    crypto_auth_hmacsha256_update(&st, &counter, 1);
    crypto_auth_hmacsha256_final(&st, block.data());
    block_len = kHash;
    const std::size_t take = std::min(kHash, length - okm.size());
    okm.insert(okm.end(), block.begin(), block.begin() + take);
  }
  sodium_memzero(prk.data(), prk.size());
  return okm;
}

EpochKeys derive_epoch_keys(const SharedSecret& secret, std::uint32_t epoch) {
  auto derive = [&](std::string_view context) {
    Bytes info(context.begin(), context.end());
    info.push_back('/');
    wire::put_u32(info, epoch);
    const Bytes okm = hkdf_sha256(secret.bytes, as_bytes(kEpochSalt), info, 32);
    Key32 out;
    std::copy(okm.begin(), okm.end(), out.begin());
    return out;
  };
  EpochKeys keys;
  keys.epoch = epoch;
  keys.sym_key = derive(kIdEncContext);
  keys.prg_seed = derive(kMaskPrgContext);
  return keys;
}

Nonce12 make_nonce(std::uint32_t epoch, std::uint32_t round, NoncePhase phase, std::uint8_t sender,
                   std::uint16_t position) {
  Bytes b;
  b.reserve(12);
  wire::put_u32(b, epoch);
  wire::put_u32(b, round);
  b.push_back(static_cast<std::uint8_t>(phase));
  b.push_back(sender);
  wire::put_u16(b, position);
  Nonce12 n;
  std::copy(b.begin(), b.end(), n.begin());
  return n;
}

Bytes EncryptedIdBatch::to_wire() const {
  Bytes out(nonce.begin(), nonce.end());
  out.insert(out.end(), ciphertext.begin(), ciphertext.end());
  return out;
}

EncryptedIdBatch EncryptedIdBatch::from_wire(std::uint16_t cluster_id, std::span<const std::uint8_t> wire) {
  if (wire.size() < 12 + kAeadTagBytes) {
    throw Error(Errc::MalformedFrame, "encrypted id batch shorter than nonce and tag");
  }
  EncryptedIdBatch b;
  b.cluster_id = cluster_id;
  std::copy_n(wire.begin(), 12, b.nonce.begin());
  b.ciphertext.assign(wire.begin() + 12, wire.end());
  return b;
}

Bytes serialize_ids(std::span<const SampleId> ids) {
  Bytes out;
  out.reserve(4 + 8 * ids.size());
  wire::put_u32(out, static_cast<std::uint32_t>(ids.size()));
  for (SampleId id : ids) wire::put_u64(out, id);
  return out;
}

std::vector<SampleId> deserialize_ids(std::span<const std::uint8_t> bytes) {
  wire::Reader r(bytes);
  const std::uint32_t n = r.u32();
  if (r.remaining() != 8ull * n) throw Error(Errc::MalformedFrame, "id list length prefix disagrees with size");
  std::vector<SampleId> ids(n);
  for (auto& id : ids) id = r.u64();
  return ids;
}

EncryptedIdBatch encrypt_sample_ids(const Key32& key, std::span<const SampleId> ids, const Nonce12& nonce,
                                    std::uint16_t cluster_id) {
  ensure_crypto_initialized();
  const Bytes plain = serialize_ids(ids);
  const auto ad = cluster_ad(cluster_id);
  EncryptedIdBatch batch;
  batch.cluster_id = cluster_id;
  batch.nonce = nonce;
  batch.ciphertext.resize(plain.size() + crypto_aead_chacha20poly1305_ietf_ABYTES);
  unsigned long long clen = 0;
  crypto_aead_chacha20poly1305_ietf_encrypt(batch.ciphertext.data(), &clen, plain.data(), plain.size(), ad.data(),
                                            ad.size(), nullptr, nonce.data(), key.data());
  batch.ciphertext.resize(clen);
  return batch;
}

std::optional<std::vector<SampleId>> try_decrypt_sample_ids(const Key32& key, const EncryptedIdBatch& batch) {
  ensure_crypto_initialized();
  if (batch.ciphertext.size() < crypto_aead_chacha20poly1305_ietf_ABYTES) return std::nullopt;
  const auto ad = cluster_ad(batch.cluster_id);
  Bytes plain(batch.ciphertext.size() - crypto_aead_chacha20poly1305_ietf_ABYTES);
  unsigned long long mlen = 0;
  if (crypto_aead_chacha20poly1305_ietf_decrypt(plain.data(), &mlen, nullptr, batch.ciphertext.data(),
                                                batch.ciphertext.size(), ad.data(), ad.size(),
                                                batch.nonce.data(), key.data()) != 0) {
    return std::nullopt;
  }
  plain.resize(mlen);
  return deserialize_ids(plain);
}

std::vector<SampleId> decrypt_sample_ids(const Key32& key, const EncryptedIdBatch& batch) {
  auto ids = try_decrypt_sample_ids(key, batch);
  if (!ids) throw Error(Errc::AuthenticationFailed, "sample-id batch does not authenticate under this key");
  return std::move(*ids);
}

RingVector prg_expand(const Key32& seed, std::size_t count, const PrgStreamId& stream) {
  ensure_crypto_initialized();
  RingVector out(count);
  if (count == 0) return out;
  std::vector<std::uint8_t> ks(count * 8);
  crypto_stream_chacha20_ietf(ks.data(), ks.size(), stream.data(), seed.data());
  for (std::size_t k = 0; k < count; ++k) {
    out[k] = RingElement(wire::load_u64(ks.data() + 8 * k));
  }
  return out;
}

}  // namespace vflsa
