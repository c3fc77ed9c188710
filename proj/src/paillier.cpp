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

#include "vflsa/paillier.hpp"

#include "vflsa/error.hpp"

namespace vflsa {

namespace {

mpz_class powm(const mpz_class& base, const mpz_class& exp, const mpz_class& mod) {
  mpz_class out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return out;
}

mpz_class invert(const mpz_class& a, const mpz_class& mod) {
  mpz_class out;
  if (mpz_invert(out.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) == 0) {
    throw Error(Errc::MessageOutOfRange, "value has no inverse");
  }
  return out;
}

mpz_class random_prime(unsigned bits, gmp_randclass& rng) {
  mpz_class x = rng.get_z_bits(bits);
  mpz_setbit(x.get_mpz_t(), bits - 1);
  mpz_setbit(x.get_mpz_t(), bits - 2);  // keeps p * q at full width
  mpz_class p;
  mpz_nextprime(p.get_mpz_t(), x.get_mpz_t());
  return p;
}

// L(u) = (u - 1) / m
mpz_class l_function(const mpz_class& u, const mpz_class& m) { return (u - 1) / m; }

void check_range(const mpz_class& v, const mpz_class& n, const char* what) {
  if (v < 0 || v >= n) throw Error(Errc::MessageOutOfRange, std::string(what) + " must lie in [0, n)");
}

}  // namespace

PaillierKeyPair paillier_keygen(unsigned bits, std::uint64_t seed) {
  if (bits < 64 || bits % 2 != 0) throw Error(Errc::MessageOutOfRange, "key size must be even and >= 64 bits");
  gmp_randclass rng(gmp_randinit_mt);
  rng.seed(static_cast<unsigned long>(seed));
  PaillierKeyPair kp;
  for (;;) {
    const mpz_class p = random_prime(bits / 2, rng);
    const mpz_class q = random_prime(bits / 2, rng);
    if (p == q) continue;
    const mpz_class n = p * q;
    const mpz_class phi = (p - 1) * (q - 1);
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), n.get_mpz_t(), phi.get_mpz_t());
    if (g != 1 || mpz_sizeinbase(n.get_mpz_t(), 2) != bits) continue;

    kp.pk.n = n;
    kp.pk.n_squared = n * n;
    kp.pk.bits = bits;
    auto& sk = kp.sk;
    sk.p = p;
    sk.q = q;
    mpz_lcm(sk.lambda.get_mpz_t(), mpz_class(p - 1).get_mpz_t(), mpz_class(q - 1).get_mpz_t());
    sk.mu = invert(sk.lambda % n, n);
    sk.p_squared = p * p;
    sk.q_squared = q * q;
    // With g = n + 1: h_p = L_p(g^(p-1) mod p^2)^-1 mod p.
    sk.hp = invert(l_function(powm(n + 1, p - 1, sk.p_squared), p), p);
    sk.hq = invert(l_function(powm(n + 1, q - 1, sk.q_squared), q), q);
    sk.q_inv_p = invert(q, p);
    return kp;
  }
}

PaillierCiphertext paillier_encrypt(const PaillierPublicKey& pk, const mpz_class& m, gmp_randclass& rng) {
  check_range(m, pk.n, "plaintext");
  mpz_class r;
  mpz_class g;
  do {
    r = rng.get_z_range(pk.n);
    mpz_gcd(g.get_mpz_t(), r.get_mpz_t(), pk.n.get_mpz_t());
  } while (r == 0 || g != 1);
  // (1 + n)^m = 1 + m n  (mod n^2)
  mpz_class c = (1 + m * pk.n) % pk.n_squared;
  c = c * powm(r, pk.n, pk.n_squared) % pk.n_squared;
  return {c};
}

PaillierCiphertext paillier_add(const PaillierPublicKey& pk, const PaillierCiphertext& a, const PaillierCiphertext& b) {
  return {a.c * b.c % pk.n_squared};
}

PaillierCiphertext paillier_scalar_mul(const PaillierPublicKey& pk, const PaillierCiphertext& c, const mpz_class& k) {
  check_range(k, pk.n, "scalar");
  return {powm(c.c, k, pk.n_squared)};
}

mpz_class paillier_decrypt(const PaillierKeyPair& keys, const PaillierCiphertext& c) {
  const auto& sk = keys.sk;
  check_range(c.c, keys.pk.n_squared, "ciphertext");
  const mpz_class mp = l_function(powm(c.c % sk.p_squared, sk.p - 1, sk.p_squared), sk.p) * sk.hp % sk.p;
  const mpz_class mq = l_function(powm(c.c % sk.q_squared, sk.q - 1, sk.q_squared), sk.q) * sk.hq % sk.q;
  // Garner recombination.
  mpz_class u = (mp - mq) * sk.q_inv_p % sk.p;
  if (u < 0) u += sk.p;
  return mq + u * sk.q;
}

mpz_class paillier_encode_signed(const PaillierPublicKey& pk, std::int64_t v) {
  mpz_class m;
  mpz_set_si(m.get_mpz_t(), static_cast<long>(v));
  if (m < 0) m += pk.n;
  return m;
}

mpz_class paillier_decode_signed(const PaillierPublicKey& pk, const mpz_class& m) {
  if (m > pk.n / 2) return m - pk.n;
  return m;
}

}  // namespace vflsa
