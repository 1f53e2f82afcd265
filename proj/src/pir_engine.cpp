#include "pkd/pir_engine.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace pkd::pir {

namespace {

int ceil_log2(std::size_t n) {
  int bits = 0;
  std::size_t v = 1;
  while (v < n) {
    v <<= 1;
    ++bits;
  }
  return bits;
}

crypto::BigInt import_bytes(std::span<const std::uint8_t> bytes) {
  crypto::BigInt v;
  if (!bytes.empty())
    mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 0, 0, bytes.data());
  return v;
}

std::vector<std::uint8_t> export_bytes(const crypto::BigInt& v,
                                       std::size_t width) {
  std::vector<std::uint8_t> out(width, 0);
  if (v == 0) return out;
  std::size_t count = 0;
  std::vector<std::uint8_t> raw((mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8);
  mpz_export(raw.data(), &count, 1, 1, 0, 0, v.get_mpz_t());
  if (count > width) throw std::runtime_error("export: value wider than field");
  std::memcpy(out.data() + (width - count), raw.data(), count);
  return out;
}

}  // namespace

std::vector<crypto::BigInt> chunk_item(std::span<const std::uint8_t> item,
                                       int chunk_bits) {
  if (chunk_bits < 1) throw std::invalid_argument("chunk: width < 1");
  std::size_t total_bits = item.size() * 8;
  std::size_t n_chunks =
      (total_bits + static_cast<std::size_t>(chunk_bits) - 1) /
      static_cast<std::size_t>(chunk_bits);
  if (n_chunks == 0) n_chunks = 1;

  crypto::BigInt v = import_bytes(item);
  // right-pad to a whole number of chunks
  std::size_t pad = n_chunks * static_cast<std::size_t>(chunk_bits) - total_bits;
  v <<= pad;

  crypto::BigInt mask = (crypto::BigInt(1) << chunk_bits) - 1;
  std::vector<crypto::BigInt> out(n_chunks);
  for (std::size_t j = 0; j < n_chunks; ++j) {
    std::size_t shift = (n_chunks - 1 - j) * static_cast<std::size_t>(chunk_bits);
    out[j] = (v >> shift) & mask;
  }
  return out;
}

std::vector<std::uint8_t> dechunk_item(std::span<const crypto::BigInt> chunks,
                                       int chunk_bits,
                                       std::size_t item_bytes) {
  crypto::BigInt v = 0;
  for (const auto& c : chunks) {
    v <<= chunk_bits;
    v |= c;
  }
  std::size_t total_bits = item_bytes * 8;
  std::size_t pad =
      chunks.size() * static_cast<std::size_t>(chunk_bits) - total_bits;
  v >>= pad;
  return export_bytes(v, item_bytes);
}

int default_chunk_bits(const crypto::PublicKey& pk, std::size_t n_items) {
  int width = pk.plaintext_bits() - ceil_log2(n_items) - 1;
  if (width < 1)
    throw std::invalid_argument("chunk width: modulus too small for library");
  return width;
}

PirLibrary build_library(const std::vector<std::vector<std::uint8_t>>& items,
                         int chunk_bits) {
  if (items.empty()) throw std::invalid_argument("library: no items");
  PirLibrary lib;
  lib.item_bytes = items[0].size();
  lib.chunk_bits = chunk_bits;
  for (const auto& item : items) {
    if (item.size() != lib.item_bytes)
      throw std::invalid_argument("library: unequal item sizes");
    lib.matrix.push_back(chunk_item(item, chunk_bits));
  }
  return lib;
}

PirQuery make_query(const crypto::PublicKey& client_pk, std::size_t index,
                    std::size_t n_items, Rng& rng) {
  if (index >= n_items) throw std::invalid_argument("query: index out of range");
  PirQuery q;
  q.client_pk = client_pk;
  q.sel.reserve(n_items);
  for (std::size_t i = 0; i < n_items; ++i)
    q.sel.push_back(crypto::encrypt(client_pk, i == index ? 1 : 0, rng));
  return q;
}

PirResponse answer(const PirQuery& query, const PirLibrary& lib) {
  if (query.sel.size() != lib.n_items())
    throw std::invalid_argument("answer: selection size mismatch");
  if (lib.chunk_bits + ceil_log2(lib.n_items()) >=
      query.client_pk.plaintext_bits())
    throw std::invalid_argument("answer: chunks too wide for plaintext space");

  const auto& pk = query.client_pk;
  PirResponse resp;
  resp.chunks.resize(lib.n_chunks());
  for (std::size_t j = 0; j < lib.n_chunks(); ++j) {
    crypto::Ciphertext acc{1};  // E(0)
    for (std::size_t i = 0; i < lib.n_items(); ++i)
      acc = crypto::add(
          pk, acc, crypto::scalar_mul(pk, query.sel[i], lib.matrix[i][j]));
    resp.chunks[j] = std::move(acc);
  }
  return resp;
}

std::vector<std::uint8_t> decode(const crypto::PublicKey& pk,
                                 const crypto::PrivateKey& sk,
                                 const PirResponse& resp, int chunk_bits,
                                 std::size_t item_bytes) {
  std::vector<crypto::BigInt> chunks;
  chunks.reserve(resp.chunks.size());
  for (const auto& c : resp.chunks)
    chunks.push_back(crypto::decrypt_full(pk, sk, c));
  return dechunk_item(chunks, chunk_bits, item_bytes);
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b)
    out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t& at) {
  if (at + 4 > in.size()) throw std::runtime_error("pir wire: truncated");
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b)
    v |= static_cast<std::uint32_t>(in[at + static_cast<size_t>(b)]) << (8 * b);
  at += 4;
  return v;
}

void put_bigint(std::vector<std::uint8_t>& out, const crypto::BigInt& v) {
  std::vector<std::uint8_t> raw;
  if (v != 0) {
    raw.resize((mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8);
    std::size_t count = 0;
    mpz_export(raw.data(), &count, 1, 1, 0, 0, v.get_mpz_t());
    raw.resize(count);
  }
  put_u32(out, static_cast<std::uint32_t>(raw.size()));
  out.insert(out.end(), raw.begin(), raw.end());
}

crypto::BigInt get_bigint(std::span<const std::uint8_t> in, std::size_t& at) {
  std::uint32_t len = get_u32(in, at);
  if (at + len > in.size()) throw std::runtime_error("pir wire: truncated");
  crypto::BigInt v;
  if (len > 0) mpz_import(v.get_mpz_t(), len, 1, 1, 0, 0, in.data() + at);
  at += len;
  return v;
}

}  // namespace

std::vector<std::uint8_t> serialize_query(const PirQuery& q) {
  std::vector<std::uint8_t> out;
  put_bigint(out, q.client_pk.modulus);
  put_u32(out, static_cast<std::uint32_t>(q.sel.size()));
  for (const auto& c : q.sel) put_bigint(out, c.value);
  return out;
}

PirQuery parse_query(std::span<const std::uint8_t> bytes) {
  std::size_t at = 0;
  PirQuery q;
  q.client_pk.modulus = get_bigint(bytes, at);
  q.client_pk.generator = q.client_pk.modulus + 1;
  q.client_pk.modulus_sq = q.client_pk.modulus * q.client_pk.modulus;
  q.client_pk.key_bits =
      static_cast<int>(mpz_sizeinbase(q.client_pk.modulus.get_mpz_t(), 2));
  std::uint32_t n = get_u32(bytes, at);
  for (std::uint32_t i = 0; i < n; ++i)
    q.sel.push_back(crypto::Ciphertext{get_bigint(bytes, at)});
  if (at != bytes.size()) throw std::runtime_error("pir wire: trailing bytes");
  return q;
}

std::vector<std::uint8_t> serialize_response(const PirResponse& r) {
  std::vector<std::uint8_t> out;
  put_u32(out, static_cast<std::uint32_t>(r.chunks.size()));
  for (const auto& c : r.chunks) put_bigint(out, c.value);
  return out;
}

PirResponse parse_response(std::span<const std::uint8_t> bytes) {
  std::size_t at = 0;
  PirResponse r;
  std::uint32_t n = get_u32(bytes, at);
  for (std::uint32_t i = 0; i < n; ++i)
    r.chunks.push_back(crypto::Ciphertext{get_bigint(bytes, at)});
  if (at != bytes.size()) throw std::runtime_error("pir wire: trailing bytes");
  return r;
}

std::vector<BenchPoint> bench_answer(std::span<const std::size_t> sizes,
                                     std::size_t n_items, int key_bits,
                                     int trials, Rng& rng) {
  auto km = crypto::keygen(key_bits, 1, 1, rng);
  std::vector<BenchPoint> out;
  for (std::size_t size : sizes) {
    std::size_t item_bytes = size / n_items;
    if (item_bytes == 0)
      throw std::invalid_argument("bench: library smaller than item count");
    std::vector<std::vector<std::uint8_t>> items(n_items);
    for (auto& item : items) {
      item.resize(item_bytes);
      for (auto& b : item)
        b = static_cast<std::uint8_t>(rng.uniform_below(256));
    }
    auto lib =
        build_library(items, default_chunk_bits(km.pk, n_items));
    auto q = make_query(km.pk, rng.uniform_below(n_items), n_items, rng);

    double best = 0.0;
    for (int t = 0; t < trials; ++t) {
      auto start = std::chrono::steady_clock::now();
      auto resp = answer(q, lib);
      auto stop = std::chrono::steady_clock::now();
      double secs = std::chrono::duration<double>(stop - start).count();
      if (t == 0 || secs < best) best = secs;
      (void)resp;
    }
    out.push_back(BenchPoint{size, best});
  }
  return out;
}

}  // namespace pkd::pir
