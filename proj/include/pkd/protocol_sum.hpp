#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "pkd/crypto_he.hpp"
#include "pkd/dp_noise.hpp"
#include "pkd/rng.hpp"

// Single-process simulation of the platform-mediated private sum. One round
// of l parallel sums: every worker submits one encrypted perturbed value per
// bin, the platform folds them homomorphically, forwards each folded
// ciphertext to T decryptor workers, and recombines their partial
// decryptions. Every encrypted message is counted, worker -> platform and
// platform -> worker, so simulated totals can be reconciled against the
// closed-form cost model.

namespace pkd::protocol {

struct MessageLog {
  std::uint64_t to_platform = 0;  // encrypted messages received by platform
  std::uint64_t by_platform = 0;  // encrypted messages sent by platform
  std::map<int, std::uint64_t> per_worker;  // sent by each worker

  void merge(const MessageLog& other);
  double per_worker_avg() const;
};

// One protocol round. bin_of[i] is the bin that worker i raises by one, or -1
// when the worker contributes noise only (it still sends a full row of
// ciphertexts; participation is oblivious). Returns the perturbed bin totals.
class SumBackend {
 public:
  virtual ~SumBackend() = default;
  virtual std::vector<std::int64_t> histogram_round(std::span<const int> bin_of,
                                                    int bins,
                                                    const dp::NoiseParams& np,
                                                    Rng& rng) = 0;
  std::int64_t sum_round(std::span<const int> worker_bits,
                         const dp::NoiseParams& np, Rng& rng);
  MessageLog& log() { return log_; }
  const MessageLog& log() const { return log_; }
  virtual int threshold() const = 0;

 protected:
  MessageLog log_;
};

// The real thing: threshold Paillier end to end.
class EncryptedBackend final : public SumBackend {
 public:
  // decryptors: indices of the T workers holding the key shares used here.
  // Shares are matched to decryptors by position; requires
  // decryptors.size() == pk threshold.
  EncryptedBackend(const crypto::KeyMaterial& km, std::vector<int> decryptors);
  std::vector<std::int64_t> histogram_round(std::span<const int> bin_of,
                                            int bins, const dp::NoiseParams& np,
                                            Rng& rng) override;
  int threshold() const override;

 private:
  const crypto::KeyMaterial& km_;
  std::vector<int> decryptors_;
};

// Plaintext stand-in for crypto-free experiments: computes the same perturbed
// totals (summed shares drawn in one NB-difference per bin, which is
// distribution-exact) and logs the same message counts.
class PlainBackend final : public SumBackend {
 public:
  explicit PlainBackend(int threshold_t, std::vector<int> decryptors = {});
  std::vector<std::int64_t> histogram_round(std::span<const int> bin_of,
                                            int bins, const dp::NoiseParams& np,
                                            Rng& rng) override;
  int threshold() const override { return threshold_t_; }

 private:
  int threshold_t_;
  std::vector<int> decryptors_;
};

// One private sum of worker bits (0/1) under the given keys.
std::int64_t run_private_sum(std::span<const int> worker_bits,
                             const dp::NoiseParams& np,
                             const crypto::KeyMaterial& km,
                             std::vector<int> decryptors, MessageLog& log,
                             Rng& rng);

struct PerturbedHistogram {
  std::vector<std::int64_t> bins;  // raw perturbed counts, negatives kept
  double lo = 0.0, hi = 1.0;       // [lo, hi) covered by equal-width bins
  double epsilon_spent = 0.0;

  double bin_width() const;
  int bin_index(double value) const;  // clamped into [0, bins-1]
};

// Median protocol: one histogram round over values in [lo, hi), then the
// closed-form estimate. Returns the estimate and the perturbed histogram.
std::pair<double, PerturbedHistogram> run_priv_med(
    std::span<const double> values, double lo, double hi, int bins,
    const dp::NoiseParams& np, const crypto::KeyMaterial& km,
    std::vector<int> decryptors, MessageLog& log, Rng& rng);

// Median from a perturbed histogram: pick the first bin k whose cumulative
// clamped mass reaches half the clamped total, then interpolate inside it
// using the raw masses below and above. Result is clamped into [lo, hi].
double estimate_median(const PerturbedHistogram& hist);

}  // namespace pkd::protocol
