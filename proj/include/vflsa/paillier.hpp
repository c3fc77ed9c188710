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

// Paillier cryptosystem with g = n + 1, the homomorphic baseline of the
// ablation. Not hardened (no constant-time arithmetic); benchmark use only.

#include <gmpxx.h>

#include <cstdint>

namespace vflsa {

struct PaillierPublicKey {
  mpz_class n;
  mpz_class n_squared;
  unsigned bits = 0;
};

struct PaillierSecretKey {
  mpz_class p, q;
  mpz_class lambda;  // lcm(p - 1, q - 1)
  mpz_class mu;      // lambda^-1 mod n
  // CRT decryption constants.
  mpz_class p_squared, q_squared, hp, hq, q_inv_p;
};

struct PaillierKeyPair {
  PaillierPublicKey pk;
  PaillierSecretKey sk;
};

struct PaillierCiphertext {
  mpz_class c;
};

// Modulus of exactly `bits` bits from two bits/2-bit primes. Deterministic in
// `seed`.
PaillierKeyPair paillier_keygen(unsigned bits, std::uint64_t seed);

// Errc::MessageOutOfRange unless 0 <= m < n. `rng` supplies r in Z*_n.
PaillierCiphertext paillier_encrypt(const PaillierPublicKey& pk, const mpz_class& m, gmp_randclass& rng);
PaillierCiphertext paillier_add(const PaillierPublicKey& pk, const PaillierCiphertext& a, const PaillierCiphertext& b);
// Errc::MessageOutOfRange unless 0 <= k < n.
PaillierCiphertext paillier_scalar_mul(const PaillierPublicKey& pk, const PaillierCiphertext& c, const mpz_class& k);
mpz_class paillier_decrypt(const PaillierKeyPair& keys, const PaillierCiphertext& c);

// Signed integers as residues mod n: negatives map to n - |v|, and residues
// above n/2 decode as negative.
mpz_class paillier_encode_signed(const PaillierPublicKey& pk, std::int64_t v);
mpz_class paillier_decode_signed(const PaillierPublicKey& pk, const mpz_class& m);

}  // namespace vflsa
