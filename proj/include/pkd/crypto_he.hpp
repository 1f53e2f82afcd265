#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pkd/rng.hpp"

// Additively homomorphic encryption with T-of-n threshold decryption.
// Paillier over Z_{n^2} with g = n + 1; the decryption exponent is dealt to
// the share holders with Shamir secret sharing, and partial decryptions are
// recombined Shoup-style with a factorial clearing constant so no Lagrange
// coefficient ever needs a modular inverse of a share index difference.

namespace pkd::crypto {

using BigInt = mpz_class;

struct ThresholdParams {
  int n_shares = 1;
  int threshold = 1;
  BigInt delta;        // n_shares!
  BigInt combine_inv;  // (4 * delta^2)^-1 mod modulus
};

struct PublicKey {
  BigInt modulus;     // n = p*q
  BigInt generator;   // n + 1
  BigInt modulus_sq;  // n^2, the ciphertext modulus
  int key_bits = 0;   // requested modulus size
  ThresholdParams thr;

  // Width of the plaintext space Z_n.
  int plaintext_bits() const;
};

struct KeyShare {
  int index = 0;  // 1-based evaluation point of the sharing polynomial
  BigInt value;
};

struct Ciphertext {
  BigInt value;
};

struct PartialDecryption {
  int share_index = 0;
  BigInt value;
};

// Full decryption key. The dealer keeps it; the protocol never uses it except
// as a cross-check oracle in tests and as the PIR client's own key.
struct PrivateKey {
  BigInt lambda;  // lcm(p-1, q-1)
  BigInt mu;      // lambda^-1 mod n
};

struct KeyMaterial {
  PublicKey pk;
  std::vector<KeyShare> shares;
  PrivateKey oracle;
};

// Deterministic given the rng stream. Requires 1 <= threshold <= n_shares and
// security_bits >= 128; 512/1024/2048-bit moduli are the supported sizes.
KeyMaterial keygen(int security_bits, int n_shares, int threshold, Rng& rng);

// m must lie in [0, n); use from_signed for negative values.
Ciphertext encrypt(const PublicKey& pk, const BigInt& m, Rng& rng);
Ciphertext encrypt_signed(const PublicKey& pk, std::int64_t m, Rng& rng);

// E(a) * E(b) = E(a + b); scalar k >= 0.
Ciphertext add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b);
Ciphertext scalar_mul(const PublicKey& pk, const Ciphertext& c,
                      const BigInt& k);

// Deterministic in (share, ciphertext).
PartialDecryption partial_decrypt(const PublicKey& pk, const KeyShare& share,
                                  const Ciphertext& c);

// Recombines partial decryptions from >= threshold distinct share indices.
// Throws std::invalid_argument when too few distinct shares are supplied.
BigInt combine(const PublicKey& pk, std::span<const PartialDecryption> parts);
std::int64_t combine_signed(const PublicKey& pk,
                            std::span<const PartialDecryption> parts);

// Oracle path with the dealer's full key.
BigInt decrypt_full(const PublicKey& pk, const PrivateKey& sk,
                    const Ciphertext& c);

// Signed residue mapping: values above n/2 represent negatives.
BigInt from_signed(const PublicKey& pk, std::int64_t m);
std::int64_t to_signed(const PublicKey& pk, const BigInt& m);

// Text serialization with a versioned magic header. The oracle section is
// optional; parse accepts either form.
std::string serialize_key_material(const KeyMaterial& km, bool include_oracle);
KeyMaterial parse_key_material(const std::string& text);

}  // namespace pkd::crypto
