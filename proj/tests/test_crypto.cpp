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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"
#include "vflsa/crypto.hpp"

using namespace vflsa;
using vflsa::testing::error_code_of;
using vflsa::testing::from_hex;
using vflsa::testing::key_from_hex;

TEST_CASE("hkdf matches the RFC 5869 basic vector") {
  const Bytes ikm(22, 0x0b);
  const Bytes salt = from_hex("000102030405060708090a0b0c");
  const Bytes info = from_hex("f0f1f2f3f4f5f6f7f8f9");
  const Bytes okm = hkdf_sha256(ikm, salt, info, 42);
  CHECK(okm == from_hex("3cb25f25faacd57a90434f64d0362f2a2d2d0a90cf1a5a4c5db02d56ecc4c5bf34007208d5b887185865"));
}

TEST_CASE("hkdf with empty salt and info matches RFC 5869 case 3") {
  const Bytes ikm(22, 0x0b);
  const Bytes okm = hkdf_sha256(ikm, {}, {}, 42);
  CHECK(okm == from_hex("8da4e775a563c18f715f802a063c5a31b8a11f5c5ee1879ec3454e5f3c738d2d9d201395faa4b61a96c8"));
}

TEST_CASE("x25519 agrees with the RFC 7748 vector") {
  const KeyPair alice = generate_keypair(key_from_hex("77076d0a7318a57d3c16c17251b26645df4c2f87ebc0992ab177fba51db92c2a"));
  const KeyPair bob = generate_keypair(key_from_hex("5dab087e624a8a4b79e17f8b83800ee66f3bb1292618b6fd1c2f8b27ff88e0eb"));
  CHECK(alice.public_key == key_from_hex("8520f0098930a754748b7ddcb43ef75a0dbf3a0d26381af4eba4a98eaa9b4e6a"));
  CHECK(bob.public_key == key_from_hex("de9edb7d7b7dc1b4d35b61c2ece435373f8343c85b78674dadfc7e146f882b4f"));
  const SharedSecret a = derive_shared_secret(alice, 3, bob.public_key, 1);
  const SharedSecret b = derive_shared_secret(bob, 1, alice.public_key, 3);
  CHECK(a.bytes == key_from_hex("4a5d9d5ba4ce2de1728e3bf480350f25e07e21c947d19e3376f09b3c1e161742"));
  CHECK(a.bytes == b.bytes);
  CHECK(a.low == 1);
  CHECK(a.high == 3);
}

TEST_CASE("random keypairs agree pairwise") {
  for (int i = 0; i < 20; ++i) {
    const KeyPair x = generate_keypair();
    const KeyPair y = generate_keypair();
    CHECK(derive_shared_secret(x, 0, y.public_key, 1).bytes == derive_shared_secret(y, 1, x.public_key, 0).bytes);
  }
}

TEST_CASE("public key validation") {
  CHECK(error_code_of([] { parse_public_key(Bytes(31, 1)); }) == Errc::InvalidPublicKey);
  CHECK(error_code_of([] { parse_public_key(Bytes(32, 0)); }) == Errc::InvalidPublicKey);
  Bytes one(32, 0);
  one[0] = 1;
  CHECK(error_code_of([&] { parse_public_key(one); }) == Errc::InvalidPublicKey);
  // p itself is a non-canonical encoding of zero.
  const Bytes p = from_hex("edffffffffffffffffffffffffffffffffffffffffffffffffffffffffffff7f");
  CHECK(error_code_of([&] { parse_public_key(p); }) == Errc::InvalidPublicKey);
  // Order-8 point from the libsodium blocklist.
  const Bytes order8 = from_hex("e0eb7a7c3b41b8ae1656e3faf19fc46ada098deb9c32b1fd866205165f49b800");
  CHECK(error_code_of([&] { parse_public_key(order8); }) == Errc::InvalidPublicKey);
  const KeyPair kp = generate_keypair();
  CHECK(parse_public_key(kp.public_key) == kp.public_key);
}

TEST_CASE("epoch keys separate purposes and epochs") {
  const KeyPair x = generate_keypair(Key32{1});
  const KeyPair y = generate_keypair(Key32{2});
  const SharedSecret ss = derive_shared_secret(x, 0, y.public_key, 1);
  const EpochKeys e0 = derive_epoch_keys(ss, 0);
  const EpochKeys e1 = derive_epoch_keys(ss, 1);
  CHECK(e0.sym_key != e0.prg_seed);
  CHECK(e0.sym_key != e1.sym_key);
  CHECK(e0.prg_seed != e1.prg_seed);
  CHECK(derive_epoch_keys(ss, 0).sym_key == e0.sym_key);
}

TEST_CASE("nonce layout is little-endian epoch, round, phase, sender, position") {
  const Nonce12 n = make_nonce(0x04030201u, 0x08070605u, NoncePhase::Testing, 7, 0x0b0a);
  const Nonce12 want = {1, 2, 3, 4, 5, 6, 7, 8, 2, 7, 0x0a, 0x0b};
  CHECK(n == want);
}

TEST_CASE("id encryption round trip and isolation") {
  const Key32 k1{9};
  const Key32 k2{10};
  const std::vector<SampleId> ids = {5, 1, 99, 1ull << 40};
  const Nonce12 nonce = make_nonce(0, 3, NoncePhase::Training, 0, 0);
  const EncryptedIdBatch batch = encrypt_sample_ids(k1, ids, nonce, 2);
  CHECK(batch.ciphertext.size() == 4 + 8 * ids.size() + kAeadTagBytes);
  CHECK(decrypt_sample_ids(k1, batch) == ids);
  CHECK(error_code_of([&] { decrypt_sample_ids(k2, batch); }) == Errc::AuthenticationFailed);
  CHECK_FALSE(try_decrypt_sample_ids(k2, batch).has_value());

  SUBCASE("cluster id is authenticated") {
    EncryptedIdBatch moved = batch;
    moved.cluster_id = 1;
    CHECK(error_code_of([&] { decrypt_sample_ids(k1, moved); }) == Errc::AuthenticationFailed);
  }
  SUBCASE("tampering is detected") {
    EncryptedIdBatch bad = batch;
    bad.ciphertext[3] ^= 1;
    CHECK(error_code_of([&] { decrypt_sample_ids(k1, bad); }) == Errc::AuthenticationFailed);
  }
  SUBCASE("wire form round trips") {
    const auto back = EncryptedIdBatch::from_wire(2, batch.to_wire());
    CHECK(back.nonce == batch.nonce);
    CHECK(decrypt_sample_ids(k1, back) == ids);
  }
}

TEST_CASE("empty id list encrypts") {
  const Key32 k{3};
  const auto batch = encrypt_sample_ids(k, std::vector<SampleId>{}, Nonce12{});
  CHECK(decrypt_sample_ids(k, batch).empty());
}

TEST_CASE("prg is deterministic, prefix-stable and stream-separated") {
  const Key32 seed{42};
  const RingVector a = prg_expand(seed, 100);
  const RingVector b = prg_expand(seed, 300);
  CHECK(a == RingVector(b.begin(), b.begin() + 100));
  CHECK(prg_expand(seed, 100) == a);
  PrgStreamId other{};
  other[0] = 1;
  CHECK(prg_expand(seed, 100, other) != a);
  CHECK(prg_expand(Key32{43}, 100) != a);
  CHECK(prg_expand(seed, 0).empty());
}

TEST_CASE("prg words are the ChaCha20 keystream") {
  // Key 00..1f, nonce 000000000000004a00000000; block 1 is the RFC 8439 keystream.
  Key32 seed;
  for (int i = 0; i < 32; ++i) seed[i] = static_cast<std::uint8_t>(i);
  PrgStreamId nonce{};
  nonce[7] = 0x4a;
  const RingVector v = prg_expand(seed, 16, nonce);
  const Bytes rfc = from_hex("224f51f3401bd9e1");
  std::uint64_t want = 0;
  for (int i = 7; i >= 0; --i) want = want << 8 | rfc[i];
  CHECK(v[8].value == want);
}
