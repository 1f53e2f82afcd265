#include "pkd/protocol_sum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pkd::protocol {

void MessageLog::merge(const MessageLog& other) {
  to_platform += other.to_platform;
  by_platform += other.by_platform;
  for (const auto& [w, n] : other.per_worker) per_worker[w] += n;
}

double MessageLog::per_worker_avg() const {
  if (per_worker.empty()) return 0.0;
  double total = 0.0;
  for (const auto& [w, n] : per_worker) total += static_cast<double>(n);
  return total / static_cast<double>(per_worker.size());
}

std::int64_t SumBackend::sum_round(std::span<const int> worker_bits,
                                   const dp::NoiseParams& np, Rng& rng) {
  std::vector<int> bin_of(worker_bits.size());
  for (size_t i = 0; i < worker_bits.size(); ++i)
    bin_of[i] = worker_bits[i] != 0 ? 0 : -1;
  return histogram_round(bin_of, 1, np, rng)[0];
}

EncryptedBackend::EncryptedBackend(const crypto::KeyMaterial& km,
                                   std::vector<int> decryptors)
    : km_(km), decryptors_(std::move(decryptors)) {
  if (static_cast<int>(decryptors_.size()) != km_.pk.thr.threshold)
    throw std::invalid_argument(
        "encrypted backend: decryptor count must equal key threshold");
}

int EncryptedBackend::threshold() const { return km_.pk.thr.threshold; }

std::vector<std::int64_t> EncryptedBackend::histogram_round(
    std::span<const int> bin_of, int bins, const dp::NoiseParams& np,
    Rng& rng) {
  np.validate();
  if (static_cast<int>(bin_of.size()) != np.num_workers)
    throw std::invalid_argument("histogram round: |P| mismatch");
  if (bins < 1) throw std::invalid_argument("histogram round: bins < 1");

  auto b = static_cast<std::uint64_t>(bins);
  const auto& pk = km_.pk;

  // worker side: encrypt bit + share per bin, platform folds on arrival
  std::vector<crypto::Ciphertext> acc(static_cast<size_t>(bins));
  for (auto& c : acc) c.value = 1;  // E(0) in deterministic form
  for (int i = 0; i < np.num_workers; ++i) {
    for (int j = 0; j < bins; ++j) {
      std::int64_t m = (bin_of[i] == j ? 1 : 0) + dp::noise_share(np, rng);
      acc[j] = crypto::add(pk, acc[j], crypto::encrypt_signed(pk, m, rng));
    }
    log_.per_worker[i] += b;
    log_.to_platform += b;
  }

  // decryption: platform forwards each folded bin to the T decryptors, they
  // answer with partial decryptions, platform recombines
  std::vector<std::int64_t> out(static_cast<size_t>(bins));
  std::vector<crypto::PartialDecryption> parts;
  for (int j = 0; j < bins; ++j) {
    parts.clear();
    for (size_t t = 0; t < decryptors_.size(); ++t) {
      log_.by_platform += 1;
      parts.push_back(crypto::partial_decrypt(pk, km_.shares[t], acc[j]));
      log_.per_worker[decryptors_[t]] += 1;
      log_.to_platform += 1;
    }
    out[static_cast<size_t>(j)] = crypto::combine_signed(pk, parts);
  }
  return out;
}

PlainBackend::PlainBackend(int threshold_t, std::vector<int> decryptors)
    : threshold_t_(threshold_t), decryptors_(std::move(decryptors)) {
  if (threshold_t_ < 1)
    throw std::invalid_argument("plain backend: threshold < 1");
  if (decryptors_.empty())
    for (int t = 0; t < threshold_t_; ++t) decryptors_.push_back(t);
  if (static_cast<int>(decryptors_.size()) != threshold_t_)
    throw std::invalid_argument(
        "plain backend: decryptor count must equal threshold");
}

std::vector<std::int64_t> PlainBackend::histogram_round(
    std::span<const int> bin_of, int bins, const dp::NoiseParams& np,
    Rng& rng) {
  np.validate();
  if (static_cast<int>(bin_of.size()) != np.num_workers)
    throw std::invalid_argument("histogram round: |P| mismatch");
  if (bins < 1) throw std::invalid_argument("histogram round: bins < 1");

  auto b = static_cast<std::uint64_t>(bins);
  std::vector<std::int64_t> out(static_cast<size_t>(bins), 0);
  for (int i = 0; i < np.num_workers; ++i) {
    if (bin_of[i] >= 0) out[static_cast<size_t>(bin_of[i])] += 1;
    log_.per_worker[i] += b;
    log_.to_platform += b;
  }
  for (int j = 0; j < bins; ++j)
    out[static_cast<size_t>(j)] += dp::noise_share_sum(np, np.num_workers, rng);
  for (int t : decryptors_) {
    log_.by_platform += b;
    log_.per_worker[t] += b;
    log_.to_platform += b;
  }
  return out;
}

std::int64_t run_private_sum(std::span<const int> worker_bits,
                             const dp::NoiseParams& np,
                             const crypto::KeyMaterial& km,
                             std::vector<int> decryptors, MessageLog& log,
                             Rng& rng) {
  EncryptedBackend backend(km, std::move(decryptors));
  std::int64_t out = backend.sum_round(worker_bits, np, rng);
  log.merge(backend.log());
  return out;
}

double PerturbedHistogram::bin_width() const {
  return (hi - lo) / static_cast<double>(bins.size());
}

int PerturbedHistogram::bin_index(double value) const {
  int l = static_cast<int>(bins.size());
  auto k = static_cast<int>(std::floor((value - lo) / bin_width()));
  return std::clamp(k, 0, l - 1);
}

std::pair<double, PerturbedHistogram> run_priv_med(
    std::span<const double> values, double lo, double hi, int bins,
    const dp::NoiseParams& np, const crypto::KeyMaterial& km,
    std::vector<int> decryptors, MessageLog& log, Rng& rng) {
  if (!(lo < hi)) throw std::invalid_argument("priv med: empty domain");
  PerturbedHistogram hist;
  hist.lo = lo;
  hist.hi = hi;
  hist.bins.resize(static_cast<size_t>(bins));
  hist.epsilon_spent = np.epsilon;

  std::vector<int> bin_of(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i] < lo || values[i] >= hi)
      throw std::invalid_argument("priv med: value outside [lo, hi)");
    bin_of[i] = hist.bin_index(values[i]);
  }
  EncryptedBackend backend(km, std::move(decryptors));
  hist.bins = backend.histogram_round(bin_of, bins, np, rng);
  log.merge(backend.log());
  return {estimate_median(hist), hist};
}

double estimate_median(const PerturbedHistogram& hist) {
  int l = static_cast<int>(hist.bins.size());
  if (l == 0) throw std::invalid_argument("estimate median: no bins");

  // scan on clamped bins so negative noise cannot corrupt the cumulative mass
  double total = 0.0;
  for (auto v : hist.bins) total += static_cast<double>(std::max<std::int64_t>(v, 0));
  double mid = (hist.lo + hist.hi) / 2.0;
  if (total <= 0.0) return mid;

  double half = total / 2.0, cum = 0.0;
  int k = l - 1;
  for (int j = 0; j < l; ++j) {
    cum += static_cast<double>(std::max<std::int64_t>(hist.bins[j], 0));
    if (cum >= half) {
      k = j;
      break;
    }
  }

  double below = 0.0, above = 0.0;
  for (int j = 0; j < k; ++j) below += static_cast<double>(hist.bins[j]);
  for (int j = k + 1; j < l; ++j) above += static_cast<double>(hist.bins[j]);
  double at = static_cast<double>(hist.bins[static_cast<size_t>(k)]);

  double w = hist.bin_width();
  double m;
  if (at == 0.0)
    m = hist.lo + w * (k + 0.5);  // degenerate pivot: bin center
  else
    m = hist.lo + w * (k + 0.5 + (above - below) / (2.0 * at));
  return std::clamp(m, hist.lo, hist.hi);
}

}  // namespace pkd::protocol
