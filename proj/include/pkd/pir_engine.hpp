#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pkd/crypto_he.hpp"
#include "pkd/rng.hpp"

// Computational PIR over the homomorphic cryptosystem. The server stores the
// library as a matrix of plaintext chunks; the client sends an encrypted
// selection vector (one ciphertext per item, a 1 at the wanted index); the
// server returns, per chunk column, the homomorphic dot product of the
// selection vector with the column. Server work touches every entry, so the
// answer cost is linear in library size and independent of the index.

namespace pkd::pir {

struct PirLibrary {
  std::size_t item_bytes = 0;
  int chunk_bits = 0;
  // matrix[item][chunk], big-endian chunking, last chunk zero-padded
  std::vector<std::vector<crypto::BigInt>> matrix;

  std::size_t n_items() const { return matrix.size(); }
  std::size_t n_chunks() const {
    return matrix.empty() ? 0 : matrix[0].size();
  }
};

// Splits an item into chunk_bits-wide big-endian pieces; pads the tail with
// low zero bits. dechunk_item inverts it given the original byte length.
std::vector<crypto::BigInt> chunk_item(std::span<const std::uint8_t> item,
                                       int chunk_bits);
std::vector<std::uint8_t> dechunk_item(std::span<const crypto::BigInt> chunks,
                                       int chunk_bits, std::size_t item_bytes);

// Largest chunk width that keeps a full dot product inside the plaintext
// space: plaintext_bits - ceil(log2(n_items)) - 1.
int default_chunk_bits(const crypto::PublicKey& pk, std::size_t n_items);

// All items must have equal size (pad upstream).
PirLibrary build_library(const std::vector<std::vector<std::uint8_t>>& items,
                         int chunk_bits);

struct PirQuery {
  crypto::PublicKey client_pk;
  std::vector<crypto::Ciphertext> sel;  // encrypted 0/1 selection vector
};

struct PirResponse {
  std::vector<crypto::Ciphertext> chunks;
};

PirQuery make_query(const crypto::PublicKey& client_pk, std::size_t index,
                    std::size_t n_items, Rng& rng);

// Requires chunk_bits + ceil(log2(n_items)) < client plaintext bits.
PirResponse answer(const PirQuery& query, const PirLibrary& lib);

std::vector<std::uint8_t> decode(const crypto::PublicKey& pk,
                                 const crypto::PrivateKey& sk,
                                 const PirResponse& resp, int chunk_bits,
                                 std::size_t item_bytes);

// Simulated wire: length-prefixed big-endian ciphertext sequences.
std::vector<std::uint8_t> serialize_query(const PirQuery& q);
PirQuery parse_query(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_response(const PirResponse& r);
PirResponse parse_response(std::span<const std::uint8_t> bytes);

struct BenchPoint {
  std::size_t library_bytes = 0;
  double answer_seconds = 0.0;
};

// Times one answer per library size (best of `trials`), with n_items items of
// size library_bytes / n_items each.
std::vector<BenchPoint> bench_answer(std::span<const std::size_t> sizes,
                                     std::size_t n_items, int key_bits,
                                     int trials, Rng& rng);

}  // namespace pkd::pir
