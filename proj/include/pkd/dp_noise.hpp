#pragma once

#include <cstdint>

#include "pkd/rng.hpp"

// Distributed noise for epsilon-differentially-private counts. The target
// distribution is the two-sided geometric mechanism with alpha = exp(-eps)
// (sensitivity-1 counting queries). It is infinitely divisible: the sum of n
// independent shares, each a difference of two negative binomial draws with
// shape 1/n, has exactly the two-sided geometric law. Workers draw shares
// with shape 1/(|P| - tau) so any |P| - tau honest participants already
// supply full noise; extra shares only overestimate.

namespace pkd::dp {

struct NoiseParams {
  double epsilon = 0.0;   // budget portion for this query
  int num_workers = 0;    // |P|
  int collusion_tau = 0;  // tolerated colluders, tau < |P|

  double alpha() const;        // exp(-epsilon)
  double share_shape() const;  // 1 / (|P| - tau)
  void validate() const;       // throws std::invalid_argument
};

// Negative binomial with pmf C(k - 1 + r, k) * alpha^k * (1 - alpha)^r,
// sampled through a gamma-Poisson mixture so fractional shapes work.
std::int64_t sample_negative_binomial(double r, double alpha, Rng& rng);

// One worker's additive share: difference of two NB draws of shape
// 1/(|P| - tau).
std::int64_t noise_share(const NoiseParams& np, Rng& rng);

// Sum of n_shares independent shares in one draw. NB shapes add across
// independent summands with the same alpha (the gamma mixing variables add),
// so this equals drawing and summing n_shares shares distribution-exactly.
std::int64_t noise_share_sum(const NoiseParams& np, int n_shares, Rng& rng);

// Centralized oracle: Z = 0 with prob (1-a)/(1+a), otherwise a signed
// geometric tail. Sampled by inversion, independently of the share path.
std::int64_t two_sided_geometric(double epsilon, Rng& rng);

// Closed-form pmfs, used as test oracles and for goodness-of-fit expectation.
double two_sided_geometric_pmf(double alpha, std::int64_t z);
double geometric_pmf(double alpha, std::int64_t k);  // (1-a) a^k, k >= 0
double negative_binomial_pmf(double r, double alpha, std::int64_t k);

}  // namespace pkd::dp
