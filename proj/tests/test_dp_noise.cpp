#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "pkd/dp_noise.hpp"
#include "pkd/rng.hpp"
#include "support/stats.hpp"

using namespace pkd;

TEST_CASE("two-sided geometric pmf closed form") {
  double a = std::exp(-0.5);
  // (1-a)/(1+a) at zero, symmetric geometric tails
  CHECK(dp::two_sided_geometric_pmf(a, 0) ==
        doctest::Approx((1 - a) / (1 + a)).epsilon(1e-12));
  CHECK(dp::two_sided_geometric_pmf(a, 3) ==
        doctest::Approx((1 - a) / (1 + a) * std::pow(a, 3)).epsilon(1e-12));
  CHECK(dp::two_sided_geometric_pmf(a, -3) ==
        doctest::Approx(dp::two_sided_geometric_pmf(a, 3)).epsilon(1e-12));

  // normalization
  double total = 0.0;
  for (int z = -200; z <= 200; ++z) total += dp::two_sided_geometric_pmf(a, z);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("negative binomial pmf: shape 1 reduces to the geometric") {
  double a = 0.55;
  for (int k = 0; k < 20; ++k)
    CHECK(dp::negative_binomial_pmf(1.0, a, k) ==
          doctest::Approx(dp::geometric_pmf(a, k)).epsilon(1e-10));

  // fractional shape normalizes
  double total = 0.0;
  for (int k = 0; k < 4000; ++k)
    total += dp::negative_binomial_pmf(0.25, 0.6, k);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("negative binomial sampler fits its pmf (chi-square)") {
  Rng rng(101);
  const double a = 0.6;
  const int n = 100000;

  for (double r : {1.0, 0.5, 0.1}) {
    std::vector<std::int64_t> samples(n);
    for (auto& s : samples) s = dp::sample_negative_binomial(r, a, rng);
    double p = teststats::chi2_gof_p(
        samples, [&](std::int64_t k) { return dp::negative_binomial_pmf(r, a, k); });
    INFO("r = ", r, ", p = ", p);
    CHECK(p > 0.01);
  }
}

TEST_CASE("two-sided geometric sampler fits its pmf (chi-square)") {
  Rng rng(102);
  const int n = 100000;
  for (double eps : {0.5, 0.1}) {
    std::vector<std::int64_t> samples(n);
    for (auto& s : samples) s = dp::two_sided_geometric(eps, rng);
    double a = std::exp(-eps);
    double p = teststats::chi2_gof_p(
        samples, [&](std::int64_t z) { return dp::two_sided_geometric_pmf(a, z); });
    INFO("eps = ", eps, ", p = ", p);
    CHECK(p > 0.01);
  }
}

TEST_CASE("two-sided geometric equals a difference of two geometrics") {
  Rng rng(103);
  const int n = 100000;
  const double eps = 0.5, a = std::exp(-eps);

  std::vector<std::int64_t> direct(n), diff(n);
  for (auto& s : direct) s = dp::two_sided_geometric(eps, rng);
  // difference of two iid geometric(alpha) draws via the NB shape-1 sampler
  for (auto& s : diff)
    s = dp::sample_negative_binomial(1.0, a, rng) -
        dp::sample_negative_binomial(1.0, a, rng);
  double p = teststats::chi2_two_sample_p(direct, diff);
  INFO("p = ", p);
  CHECK(p > 0.01);
}

TEST_CASE("summed worker shares reproduce the two-sided geometric") {
  // infinite divisibility: |P| - tau shares of shape 1/(|P| - tau)
  const int n = 100000;
  struct Case {
    int shares;
    double eps;
    std::uint64_t seed;
  };
  for (auto [shares, eps, seed] :
       {Case{1, 0.5, 201}, Case{10, 0.5, 202}, Case{50, 0.1, 203}}) {
    Rng rng(seed);
    dp::NoiseParams np{eps, shares + 1, 1};  // |P| - tau = shares
    std::vector<std::int64_t> sums(n);
    for (auto& s : sums) {
      std::int64_t acc = 0;
      for (int i = 0; i < shares; ++i) acc += dp::noise_share(np, rng);
      s = acc;
    }
    double a = std::exp(-eps);
    double p = teststats::chi2_gof_p(
        sums, [&](std::int64_t z) { return dp::two_sided_geometric_pmf(a, z); });
    INFO("shares = ", shares, ", eps = ", eps, ", p = ", p);
    CHECK(p > 0.01);
  }
}

TEST_CASE("noise_share_sum matches the summed-share distribution") {
  const int n = 100000;
  const double eps = 0.3;
  dp::NoiseParams np{eps, 12, 2};  // shape 1/10 per share

  Rng r1(301), r2(302);
  std::vector<std::int64_t> summed(n), batched(n);
  for (auto& s : summed) {
    std::int64_t acc = 0;
    for (int i = 0; i < 10; ++i) acc += dp::noise_share(np, r1);
    s = acc;
  }
  for (auto& s : batched) s = dp::noise_share_sum(np, 10, r2);
  double p = teststats::chi2_two_sample_p(summed, batched);
  INFO("p = ", p);
  CHECK(p > 0.01);
}

TEST_CASE("parameter validation") {
  Rng rng(400);
  CHECK_THROWS_AS((void)dp::two_sided_geometric(0.0, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)dp::sample_negative_binomial(0.0, 0.5, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)dp::sample_negative_binomial(1.0, 1.0, rng),
                  std::invalid_argument);
  dp::NoiseParams bad{0.5, 5, 5};
  CHECK_THROWS_AS((void)dp::noise_share(bad, rng), std::invalid_argument);
}

TEST_CASE("share variance grows with tighter epsilon") {
  // coarse sanity: mean near zero, larger spread at smaller epsilon
  auto spread = [](double eps, std::uint64_t seed) {
    Rng rng(seed);
    dp::NoiseParams np{eps, 11, 1};
    double s2 = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      auto v = static_cast<double>(dp::noise_share_sum(np, 10, rng));
      s2 += v * v;
    }
    return s2 / n;
  };
  CHECK(spread(0.1, 77) > spread(1.0, 78));
}
