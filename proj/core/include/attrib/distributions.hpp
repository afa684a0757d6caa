#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "attrib/core.hpp"

namespace attrib {

/// Seeded random stream backed by std::mt19937_64.
///
/// Parallel chains use `RngStream::substream(seed, index)`, which seeds the
/// engine with splitmix64(seed ^ splitmix64(index + 0x9E3779B97F4A7C15)).
/// A stream is owned by one thread; it is movable but not copyable.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  RngStream(const RngStream&) = delete;
  RngStream& operator=(const RngStream&) = delete;
  RngStream(RngStream&&) = default;
  RngStream& operator=(RngStream&&) = default;

  static RngStream substream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t seed() const { return seed_; }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

/// Log of a Gamma(shape, 1) variate; stays finite for very small shapes.
double sample_log_gamma(RngStream& rng, double shape);
double sample_gamma(RngStream& rng, double shape);

double sample_beta(RngStream& rng, const BetaParams& params);

std::vector<double> sample_dirichlet(RngStream& rng, std::span<const double> alphas);
std::array<double, 4> sample_dirichlet4(RngStream& rng, const std::array<double, 4>& alphas);

std::int64_t sample_binomial(RngStream& rng, std::int64_t trials, double prob);

double log_beta_function(double a, double b);
double beta_log_density(double x, const BetaParams& params);

/// Regularized incomplete beta function I_x(alpha, beta).
double beta_cdf(double x, const BetaParams& params);
/// Inverse of beta_cdf by safeguarded Newton iteration.
double beta_inv_cdf(double u, const BetaParams& params);

/// Inverse-CDF draw from Beta(params) restricted to [lo, hi].
/// Throws DegenerateInterval when the interval carries less than 1e-300 mass.
double sample_truncated_beta(RngStream& rng, const BetaParams& params, double lo, double hi);

/// Draw from N(mean, covariance). The covariance may be semi-definite;
/// throws NotPSD when it is not, even after a 1e-12 diagonal jitter.
Eigen::VectorXd sample_mvnormal(RngStream& rng, const Eigen::VectorXd& mean,
                                const Eigen::MatrixXd& covariance);

}  // namespace attrib
