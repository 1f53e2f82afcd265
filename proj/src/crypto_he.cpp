#include "pkd/crypto_he.hpp"

#include <map>
#include <sstream>
#include <stdexcept>

namespace pkd::crypto {

namespace {

BigInt powm(const BigInt& base, const BigInt& exp, const BigInt& mod) {
  BigInt out;
  if (exp < 0) {
    // negative exponent: invert the base first, then raise to |exp|
    BigInt inv;
    if (mpz_invert(inv.get_mpz_t(), base.get_mpz_t(), mod.get_mpz_t()) == 0)
      throw std::runtime_error("powm: base not invertible");
    BigInt e = -exp;
    mpz_powm(out.get_mpz_t(), inv.get_mpz_t(), e.get_mpz_t(), mod.get_mpz_t());
  } else {
    mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(),
             mod.get_mpz_t());
  }
  return out;
}

BigInt invert(const BigInt& a, const BigInt& mod) {
  BigInt out;
  if (mpz_invert(out.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) == 0)
    throw std::runtime_error("invert: no modular inverse");
  return out;
}

// Random prime of exactly `bits` bits with the top two bits set, so the
// product of two such primes has full length.
BigInt random_prime(unsigned bits, Rng& rng) {
  BigInt cand = rng.mpz_bits(bits);
  mpz_setbit(cand.get_mpz_t(), bits - 1);
  mpz_setbit(cand.get_mpz_t(), bits - 2);
  BigInt p;
  mpz_nextprime(p.get_mpz_t(), cand.get_mpz_t());
  return p;
}

// L(u) = (u - 1) / n; u must be 1 mod n or the combination went wrong.
BigInt l_function(const BigInt& u, const BigInt& n) {
  BigInt num = u - 1;
  BigInt q, r;
  mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), num.get_mpz_t(), n.get_mpz_t());
  if (r != 0) throw std::runtime_error("decryption failed: L(u) not integral");
  return q;
}

BigInt factorial(int k) {
  BigInt f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

int PublicKey::plaintext_bits() const {
  return static_cast<int>(mpz_sizeinbase(modulus.get_mpz_t(), 2));
}

KeyMaterial keygen(int security_bits, int n_shares, int threshold, Rng& rng) {
  if (threshold < 1 || threshold > n_shares)
    throw std::invalid_argument("keygen: need 1 <= threshold <= n_shares");
  if (security_bits < 128)
    throw std::invalid_argument("keygen: modulus too small");

  unsigned half = static_cast<unsigned>(security_bits) / 2;
  BigInt p, q, n, lambda;
  for (;;) {
    p = random_prime(half, rng);
    q = random_prime(half, rng);
    if (p == q) continue;
    n = p * q;
    if (mpz_sizeinbase(n.get_mpz_t(), 2) <
        static_cast<size_t>(security_bits))
      continue;
    BigInt pm1 = p - 1, qm1 = q - 1;
    mpz_lcm(lambda.get_mpz_t(), pm1.get_mpz_t(), qm1.get_mpz_t());
    BigInt g;
    mpz_gcd(g.get_mpz_t(), lambda.get_mpz_t(), n.get_mpz_t());
    if (g == 1) break;  // need lambda and n coprime for the exponent CRT
  }

  KeyMaterial km;
  km.pk.modulus = n;
  km.pk.generator = n + 1;
  km.pk.modulus_sq = n * n;
  km.pk.key_bits = security_bits;
  km.oracle.lambda = lambda;
  km.oracle.mu = invert(lambda, n);

  // Decryption exponent d = 0 mod lambda, d = 1 mod n. Raising a ciphertext
  // to 4*delta^2*d strips the random mask and leaves 1 + 4*delta^2*m*n.
  BigInt d = lambda * km.oracle.mu;  // lambda * (lambda^-1 mod n)

  BigInt delta = factorial(n_shares);
  km.pk.thr.n_shares = n_shares;
  km.pk.thr.threshold = threshold;
  km.pk.thr.delta = delta;
  km.pk.thr.combine_inv = invert(4 * delta * delta, n);

  // Shamir sharing of d over Z_{n*lambda}.
  BigInt share_mod = n * lambda;
  std::vector<BigInt> coeff(static_cast<size_t>(threshold));
  coeff[0] = d;
  for (int j = 1; j < threshold; ++j) coeff[j] = rng.mpz_below(share_mod);
  for (int i = 1; i <= n_shares; ++i) {
    BigInt acc = 0, x = 1;
    for (int j = 0; j < threshold; ++j) {
      acc = (acc + coeff[j] * x) % share_mod;
      x = (x * i) % share_mod;
    }
    km.shares.push_back(KeyShare{i, acc});
  }
  return km;
}

Ciphertext encrypt(const PublicKey& pk, const BigInt& m, Rng& rng) {
  BigInt mm = m % pk.modulus;
  if (mm < 0) mm += pk.modulus;
  BigInt r;
  for (;;) {
    r = rng.mpz_below(pk.modulus);
    if (r == 0) continue;
    BigInt g;
    mpz_gcd(g.get_mpz_t(), r.get_mpz_t(), pk.modulus.get_mpz_t());
    if (g == 1) break;
  }
  // (1 + m*n) * r^n mod n^2
  BigInt c = (1 + mm * pk.modulus) % pk.modulus_sq;
  c = (c * powm(r, pk.modulus, pk.modulus_sq)) % pk.modulus_sq;
  return Ciphertext{c};
}

Ciphertext encrypt_signed(const PublicKey& pk, std::int64_t m, Rng& rng) {
  return encrypt(pk, from_signed(pk, m), rng);
}

Ciphertext add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
  return Ciphertext{(a.value * b.value) % pk.modulus_sq};
}

Ciphertext scalar_mul(const PublicKey& pk, const Ciphertext& c,
                      const BigInt& k) {
  if (k < 0) throw std::invalid_argument("scalar_mul: negative scalar");
  return Ciphertext{powm(c.value, k, pk.modulus_sq)};
}

PartialDecryption partial_decrypt(const PublicKey& pk, const KeyShare& share,
                                  const Ciphertext& c) {
  BigInt e = 2 * pk.thr.delta * share.value;
  return PartialDecryption{share.index, powm(c.value, e, pk.modulus_sq)};
}

BigInt combine(const PublicKey& pk, std::span<const PartialDecryption> parts) {
  int t = pk.thr.threshold;
  std::map<int, const PartialDecryption*> picked;
  for (const auto& pd : parts) {
    if (static_cast<int>(picked.size()) == t) break;
    picked.emplace(pd.share_index, &pd);
  }
  if (static_cast<int>(picked.size()) < t)
    throw std::invalid_argument("combine: fewer distinct shares than threshold");

  // c' = prod_i part_i^(2 * lam_i) with lam_i = delta * prod_{j!=i} j/(j-i);
  // the delta factor makes every lam_i an integer.
  BigInt acc = 1;
  for (const auto& [i, pd] : picked) {
    BigInt num = pk.thr.delta, den = 1;
    for (const auto& [j, unused] : picked) {
      if (j == i) continue;
      num *= j;
      den *= (j - i);
    }
    BigInt lam;
    mpz_divexact(lam.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    acc = (acc * powm(pd->value, 2 * lam, pk.modulus_sq)) % pk.modulus_sq;
  }
  // c' = 1 + 4*delta^2*m*n mod n^2
  BigInt m = l_function(acc, pk.modulus) % pk.modulus;
  m = (m * pk.thr.combine_inv) % pk.modulus;
  return m;
}

std::int64_t combine_signed(const PublicKey& pk,
                            std::span<const PartialDecryption> parts) {
  return to_signed(pk, combine(pk, parts));
}

BigInt decrypt_full(const PublicKey& pk, const PrivateKey& sk,
                    const Ciphertext& c) {
  BigInt u = powm(c.value, sk.lambda, pk.modulus_sq);
  return (l_function(u, pk.modulus) * sk.mu) % pk.modulus;
}

BigInt from_signed(const PublicKey& pk, std::int64_t m) {
  BigInt v = static_cast<long>(m);
  v %= pk.modulus;
  if (v < 0) v += pk.modulus;
  return v;
}

std::int64_t to_signed(const PublicKey& pk, const BigInt& m) {
  BigInt half = pk.modulus / 2;
  BigInt v = m;
  if (v > half) v -= pk.modulus;
  if (!v.fits_slong_p())
    throw std::runtime_error("to_signed: value out of int64 range");
  return static_cast<std::int64_t>(v.get_si());
}

namespace {

std::string hex(const BigInt& v) { return v.get_str(16); }

BigInt unhex(const std::string& s) { return BigInt(s, 16); }

}  // namespace

std::string serialize_key_material(const KeyMaterial& km, bool include_oracle) {
  std::ostringstream out;
  out << "pkd-keys v1\n";
  out << "bits " << km.pk.key_bits << "\n";
  out << "modulus " << hex(km.pk.modulus) << "\n";
  out << "shares " << km.pk.thr.n_shares << " threshold " << km.pk.thr.threshold
      << "\n";
  for (const auto& s : km.shares)
    out << "share " << s.index << " " << hex(s.value) << "\n";
  if (include_oracle) {
    out << "oracle lambda " << hex(km.oracle.lambda) << "\n";
    out << "oracle mu " << hex(km.oracle.mu) << "\n";
  }
  return out.str();
}

KeyMaterial parse_key_material(const std::string& text) {
  std::istringstream in(text);
  std::string magic, ver;
  in >> magic >> ver;
  if (magic != "pkd-keys" || ver != "v1")
    throw std::runtime_error("key material: bad magic header");

  KeyMaterial km;
  int n_shares = 0, threshold = 0;
  std::string tok;
  while (in >> tok) {
    if (tok == "bits") {
      in >> km.pk.key_bits;
    } else if (tok == "modulus") {
      std::string h;
      in >> h;
      km.pk.modulus = unhex(h);
    } else if (tok == "shares") {
      std::string kw;
      in >> n_shares >> kw >> threshold;
      if (kw != "threshold")
        throw std::runtime_error("key material: malformed shares line");
    } else if (tok == "share") {
      KeyShare s;
      std::string h;
      in >> s.index >> h;
      s.value = unhex(h);
      km.shares.push_back(std::move(s));
    } else if (tok == "oracle") {
      std::string which, h;
      in >> which >> h;
      if (which == "lambda")
        km.oracle.lambda = unhex(h);
      else if (which == "mu")
        km.oracle.mu = unhex(h);
      else
        throw std::runtime_error("key material: unknown oracle field");
    } else {
      throw std::runtime_error("key material: unknown field " + tok);
    }
  }
  if (km.pk.modulus == 0 || n_shares == 0)
    throw std::runtime_error("key material: missing fields");
  km.pk.generator = km.pk.modulus + 1;
  km.pk.modulus_sq = km.pk.modulus * km.pk.modulus;
  km.pk.thr.n_shares = n_shares;
  km.pk.thr.threshold = threshold;
  BigInt delta = 1;
  for (int i = 2; i <= n_shares; ++i) delta *= i;
  km.pk.thr.delta = delta;
  BigInt four_d2 = 4 * delta * delta;
  if (mpz_invert(km.pk.thr.combine_inv.get_mpz_t(), four_d2.get_mpz_t(),
                 km.pk.modulus.get_mpz_t()) == 0)
    throw std::runtime_error("key material: bad modulus");
  return km;
}

}  // namespace pkd::crypto
