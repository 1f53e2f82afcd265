#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "pkd/crypto_he.hpp"
#include "pkd/dp_noise.hpp"
#include "pkd/protocol_sum.hpp"
#include "pkd/rng.hpp"
#include "support/stats.hpp"

using namespace pkd;

TEST_CASE("encrypted sum recovers the exact count when noise is negligible") {
  // At epsilon = 100 every noise share is 0 with overwhelming probability, so
  // the perturbed sum equals the true bit count.
  Rng kr(7001);
  auto km = crypto::keygen(256, 3, 2, kr);
  Rng r(7002);
  protocol::EncryptedBackend backend(km, {0, 1});
  dp::NoiseParams np{100.0, 50, 1};

  std::vector<int> bits(50, 0);
  for (int i = 0; i < 50; ++i) bits[static_cast<size_t>(i)] = (i % 3 == 0) ? 1 : 0;
  std::int64_t true_sum = std::accumulate(bits.begin(), bits.end(), 0LL);

  CHECK(backend.sum_round(bits, np, r) == true_sum);
}

TEST_CASE("plain backend matches encrypted backend exactly at negligible noise") {
  Rng kr(7003);
  auto km = crypto::keygen(256, 2, 2, kr);
  Rng r1(7004), r2(7004);
  protocol::EncryptedBackend enc(km, {0, 1});
  protocol::PlainBackend plain(2);
  dp::NoiseParams np{100.0, 20, 1};

  std::vector<int> bin_of(20);
  for (int i = 0; i < 20; ++i) bin_of[static_cast<size_t>(i)] = i % 4;
  auto henc = enc.histogram_round(bin_of, 4, np, r1);
  auto hpl = plain.histogram_round(bin_of, 4, np, r2);
  REQUIRE(henc.size() == 4);
  REQUIRE(hpl.size() == 4);
  for (int b = 0; b < 4; ++b) CHECK(henc[static_cast<size_t>(b)] == hpl[static_cast<size_t>(b)]);
  for (int b = 0; b < 4; ++b) CHECK(hpl[static_cast<size_t>(b)] == 5);
}

TEST_CASE("outsider rows contribute noise only") {
  // bin_of = -1 marks a participant outside every bin; at negligible noise
  // such rows must not move any count, though they still send ciphertexts.
  protocol::PlainBackend plain(1);
  dp::NoiseParams np{100.0, 10, 1};
  Rng r(7005);
  std::vector<int> bin_of = {0, 1, -1, -1, 1, 2, -1, 0, -1, -1};
  auto h = plain.histogram_round(bin_of, 3, np, r);
  CHECK(h[0] == 2);
  CHECK(h[1] == 2);
  CHECK(h[2] == 1);
  CHECK(plain.log().to_platform == 10 * 3 + 1 * 3);
}

TEST_CASE("message log for one median round: 4 workers, threshold 2, 10 bins") {
  Rng kr(7006);
  auto km = crypto::keygen(256, 2, 2, kr);
  Rng r(7007);
  dp::NoiseParams np{1.0, 4, 1};
  std::vector<double> values = {0.05, 0.35, 0.75, 0.95};
  protocol::MessageLog log;
  auto [m, hist] = protocol::run_priv_med(values, 0.0, 1.0, 10, np, km, {0, 1}, log, r);
  (void)m;
  REQUIRE(hist.bins.size() == 10);

  // 4*10 worker uploads plus 2*10 partial decryptions reach the platform;
  // 2*10 folded ciphertexts go out to the decryptors.
  CHECK(log.to_platform == 4 * 10 + 2 * 10);
  CHECK(log.by_platform == 2 * 10);
  CHECK(log.per_worker_avg() == doctest::Approx(60.0 / 4.0));
  CHECK(log.per_worker.at(0) == 10 + 10);
  CHECK(log.per_worker.at(1) == 10 + 10);
  CHECK(log.per_worker.at(2) == 10);
  CHECK(log.per_worker.at(3) == 10);
}

TEST_CASE("plain backend logs the same traffic as the encrypted one") {
  Rng kr(7008);
  auto km = crypto::keygen(256, 2, 2, kr);
  Rng r1(7009), r2(7010);
  protocol::EncryptedBackend enc(km, {0, 1});
  protocol::PlainBackend plain(2);
  dp::NoiseParams np{0.5, 6, 2};
  std::vector<int> bin_of = {0, 1, 2, 0, 1, 2};
  for (int round = 0; round < 3; ++round) {
    enc.histogram_round(bin_of, 5, np, r1);
    plain.histogram_round(bin_of, 5, np, r2);
  }
  CHECK(enc.log().to_platform == plain.log().to_platform);
  CHECK(enc.log().by_platform == plain.log().by_platform);
  CHECK(enc.log().per_worker == plain.log().per_worker);
}

TEST_CASE("encrypted and plain perturbed sums are equal in distribution") {
  // Same population, same noise parameters: the encrypted pipeline must not
  // distort the count distribution relative to the one-draw plain sampler.
  Rng kr(7011);
  auto km = crypto::keygen(256, 2, 2, kr);
  Rng re(7012), rp(7013);
  protocol::EncryptedBackend enc(km, {0, 1});
  protocol::PlainBackend plain(2);
  dp::NoiseParams np{0.5, 6, 2};
  std::vector<int> bits = {1, 0, 1, 1, 0, 0};

  const int rounds = 1200;
  std::vector<std::int64_t> a(static_cast<size_t>(rounds));
  std::vector<std::int64_t> b(static_cast<size_t>(rounds));
  for (int i = 0; i < rounds; ++i) {
    a[static_cast<size_t>(i)] = enc.sum_round(bits, np, re);
    b[static_cast<size_t>(i)] = plain.sum_round(bits, np, rp);
  }
  CHECK(teststats::chi2_two_sample_p(a, b) > 1e-4);
}

TEST_CASE("median estimate on hand histograms") {
  protocol::PerturbedHistogram h;
  h.lo = 0.0;
  h.hi = 1.0;

  SUBCASE("uniform mass puts the median at the centre") {
    h.bins.assign(10, 10);
    // k = 4, below = 40, above = 50: 0.1 * (4.5 + 10 / 20) = 0.5.
    CHECK(protocol::estimate_median(h) == doctest::Approx(0.5));
  }
  SUBCASE("single loaded bin lands on that bin's midpoint") {
    h.bins.assign(10, 0);
    h.bins[2] = 10;
    CHECK(protocol::estimate_median(h) == doctest::Approx(0.25));
  }
  SUBCASE("mass split over the first two bins") {
    h.bins.assign(10, 0);
    h.bins[0] = 10;
    h.bins[1] = 10;
    // k = 0, above = 10: 0.1 * (0.5 + 10 / 20) = 0.1.
    CHECK(protocol::estimate_median(h) == doctest::Approx(0.1));
  }
  SUBCASE("negative bins are clamped in the scan but kept in the offsets") {
    h.bins = {-5, 0, 8, 0};
    // Pivot k = 2 from the clamped scan; below = -5 raw, above = 0:
    // 0.25 * (2.5 + 5 / 16) = 0.703125.
    CHECK(protocol::estimate_median(h) == doctest::Approx(0.703125));
  }
  SUBCASE("non-positive total falls back to the domain midpoint") {
    h.bins.assign(8, -1);
    CHECK(protocol::estimate_median(h) == doctest::Approx(0.5));
  }
  SUBCASE("wild negative noise is clamped into the domain") {
    h.bins = {-100, 1};
    // Raw interpolation lands far above hi; the estimate clamps to hi.
    CHECK(protocol::estimate_median(h) == doctest::Approx(1.0));
  }
}

TEST_CASE("private median tracks the sample median at high epsilon") {
  Rng kr(7020);
  auto km = crypto::keygen(256, 1, 1, kr);
  Rng r(7021);
  dp::NoiseParams np{50.0, 101, 1};
  std::vector<double> values(101);
  for (int i = 0; i <= 100; ++i) values[static_cast<size_t>(i)] = i / 101.0;
  protocol::MessageLog log;
  auto [m, hist] = protocol::run_priv_med(values, 0.0, 1.0, 10, np, km, {0}, log, r);
  (void)hist;
  // Noise-free interpolation on this input: 0.4 + 0.1 * (0.5 + 9 / 20).
  CHECK(m == doctest::Approx(0.495));
  CHECK(std::fabs(m - 50.0 / 101.0) < 0.01);
}

TEST_CASE("run_priv_med validates its domain") {
  Rng kr(7022);
  auto km = crypto::keygen(256, 1, 1, kr);
  Rng r(7023);
  dp::NoiseParams np{1.0, 2, 1};
  protocol::MessageLog log;
  std::vector<double> bad = {0.2, 1.5};
  CHECK_THROWS_AS(protocol::run_priv_med(bad, 0.0, 1.0, 4, np, km, {0}, log, r),
                  std::invalid_argument);
}

TEST_CASE("histogram round validates population size against noise params") {
  protocol::PlainBackend plain(1);
  dp::NoiseParams np{1.0, 5, 1};
  Rng r(7024);
  std::vector<int> bin_of = {0, 1};  // 2 workers, np says 5
  CHECK_THROWS_AS(plain.histogram_round(bin_of, 2, np, r), std::invalid_argument);
}

TEST_CASE("histogram bin index clamps at the closed upper edge") {
  protocol::PerturbedHistogram h;
  h.lo = 0.0;
  h.hi = 1.0;
  h.bins.assign(4, 0);
  CHECK(h.bin_index(0.0) == 0);
  CHECK(h.bin_index(0.2499) == 0);
  CHECK(h.bin_index(0.25) == 1);
  CHECK(h.bin_index(1.0) == 3);
  CHECK(h.bin_width() == doctest::Approx(0.25));
}

TEST_CASE("encrypted backend rejects a decryptor set of the wrong size") {
  Rng kr(7025);
  auto km = crypto::keygen(256, 3, 2, kr);
  CHECK_THROWS_AS(protocol::EncryptedBackend(km, {0}), std::invalid_argument);
  CHECK_THROWS_AS(protocol::EncryptedBackend(km, {0, 1, 2}),
                  std::invalid_argument);
}
