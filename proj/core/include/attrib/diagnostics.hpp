#pragma once

#include <span>
#include <vector>

#include "attrib/core.hpp"

namespace attrib {

struct EssEstimate {
  double value = 0.0;
  /// Set when the series is constant; `value` is then n by convention.
  bool zero_variance = false;
};

/// Lag-k sample autocorrelation (biased, 1/n normalization).
double autocorrelation(std::span<const double> series, std::size_t lag);

/// n / (1 + 2 sum rho_k), summing lags 1, 2, ... until the first k with
/// rho_k + rho_{k+1} <= 0 (at most n/2 lags). Clamped to (0, n].
/// Requires at least 10 values.
EssEstimate ess_autocorr(std::span<const double> series);

/// (sum w)^2 / sum w^2. Throws AllZeroWeights.
double ess_weights(std::span<const double> weights);

/// Gelman-Rubin potential scale reduction factor for m >= 2 chains of equal
/// length >= 10. `split` halves each chain first. Throws ZeroVariance when
/// the within-chain variance is zero.
double bgr_psrf(const std::vector<std::vector<double>>& chains, bool split = false);

inline constexpr double kPsrfThreshold = 1.1;

struct Efficiency {
  double ess = 0.0;
  double per_second = 0.0;
  bool zero_variance = false;
};

/// ESS of `quantity` divided by the chain's wall time. Weighted chains use
/// ess_weights, others ess_autocorr.
Efficiency efficiency(const ChainResult& chain, Quantity quantity);

/// ESS per 1000 iterations. For weighted chains the denominator is the
/// number of attempted draws, so rejected proposals count as zero-weight
/// iterations.
double ess_per_thousand(const ChainResult& chain, Quantity quantity);

/// Values of `quantity` along the chain, in draw order.
std::vector<double> extract(const ChainResult& chain, Quantity quantity);

}  // namespace attrib
