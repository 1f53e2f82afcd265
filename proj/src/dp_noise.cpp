#include "pkd/dp_noise.hpp"

#include <cmath>
#include <stdexcept>

namespace pkd::dp {

double NoiseParams::alpha() const { return std::exp(-epsilon); }

double NoiseParams::share_shape() const {
  return 1.0 / (num_workers - collusion_tau);
}

void NoiseParams::validate() const {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("noise: epsilon must be positive");
  if (num_workers <= 0)
    throw std::invalid_argument("noise: need at least one worker");
  if (collusion_tau < 0 || collusion_tau >= num_workers)
    throw std::invalid_argument("noise: need 0 <= tau < |P|");
}

std::int64_t sample_negative_binomial(double r, double alpha, Rng& rng) {
  if (!(r > 0.0)) throw std::invalid_argument("negative binomial: shape <= 0");
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("negative binomial: alpha outside (0, 1)");
  // gamma-Poisson mixture: lambda ~ Gamma(r, alpha/(1-alpha)), k ~ Poi(lambda)
  std::gamma_distribution<double> gamma(r, alpha / (1.0 - alpha));
  double lambda = gamma(rng.engine());
  if (lambda <= 0.0) return 0;
  std::poisson_distribution<std::int64_t> poi(lambda);
  return poi(rng.engine());
}

std::int64_t noise_share(const NoiseParams& np, Rng& rng) {
  np.validate();
  double r = np.share_shape(), a = np.alpha();
  return sample_negative_binomial(r, a, rng) -
         sample_negative_binomial(r, a, rng);
}

std::int64_t noise_share_sum(const NoiseParams& np, int n_shares, Rng& rng) {
  np.validate();
  if (n_shares <= 0) throw std::invalid_argument("noise: n_shares <= 0");
  double r = np.share_shape() * n_shares, a = np.alpha();
  return sample_negative_binomial(r, a, rng) -
         sample_negative_binomial(r, a, rng);
}

std::int64_t two_sided_geometric(double epsilon, Rng& rng) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("two-sided geometric: epsilon <= 0");
  double a = std::exp(-epsilon);
  double u = rng.uniform01();
  if (u < (1.0 - a) / (1.0 + a)) return 0;
  // magnitude k >= 1 with pmf (1-a) a^(k-1); inversion on a fresh uniform
  double v = rng.uniform01();
  while (v <= 0.0) v = rng.uniform01();
  auto mag = 1 + static_cast<std::int64_t>(std::floor(std::log(v) / std::log(a)));
  return rng.uniform01() < 0.5 ? mag : -mag;
}

double two_sided_geometric_pmf(double alpha, std::int64_t z) {
  double base = (1.0 - alpha) / (1.0 + alpha);
  return base * std::pow(alpha, static_cast<double>(z < 0 ? -z : z));
}

double geometric_pmf(double alpha, std::int64_t k) {
  if (k < 0) return 0.0;
  return (1.0 - alpha) * std::pow(alpha, static_cast<double>(k));
}

double negative_binomial_pmf(double r, double alpha, std::int64_t k) {
  if (k < 0) return 0.0;
  double kk = static_cast<double>(k);
  double logp = std::lgamma(kk + r) - std::lgamma(kk + 1.0) - std::lgamma(r) +
                kk * std::log(alpha) + r * std::log(1.0 - alpha);
  return std::exp(logp);
}

}  // namespace pkd::dp
