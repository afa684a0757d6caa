#include "attrib/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "attrib/errors.hpp"

namespace attrib {

namespace {

// Shifted by the first value so a constant series has exactly zero spread.
double mean_of(std::span<const double> xs) {
  const double x0 = xs.front();
  double s = 0.0;
  for (double x : xs) s += x - x0;
  return x0 + s / static_cast<double>(xs.size());
}

double centered_sum_sq(std::span<const double> xs, double mean) {
  double s = 0.0;
  for (double x : xs) s += (x - mean) * (x - mean);
  return s;
}

}  // namespace

double autocorrelation(std::span<const double> series, std::size_t lag) {
  const std::size_t n = series.size();
  if (n == 0) throw EmptyChain();
  if (lag >= n) return 0.0;
  const double mean = mean_of(series);
  const double denom = centered_sum_sq(series, mean);
  if (denom <= 0.0) throw ZeroVariance();
  double num = 0.0;
  for (std::size_t t = 0; t + lag < n; ++t) num += (series[t] - mean) * (series[t + lag] - mean);
  return num / denom;
}

EssEstimate ess_autocorr(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 10) throw ValidationError("ESS needs at least 10 values");
  const double mean = mean_of(series);
  const double denom = centered_sum_sq(series, mean);
  const double nd = static_cast<double>(n);
  if (!(denom > 0.0)) return {nd, true};

  auto rho = [&](std::size_t lag) {
    double num = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) num += (series[t] - mean) * (series[t + lag] - mean);
    return num / denom;
  };

  const std::size_t max_lag = n / 2;
  double sum = 0.0;
  double current = rho(1);
  for (std::size_t k = 1; k <= max_lag; ++k) {
    const double next = k + 1 <= max_lag ? rho(k + 1) : 0.0;
    if (current + next <= 0.0) break;
    sum += current;
    current = next;
  }
  const double tau = 1.0 + 2.0 * sum;
  double ess = tau > 0.0 ? nd / tau : nd;
  ess = std::clamp(ess, std::numeric_limits<double>::min(), nd);
  return {ess, false};
}

double ess_weights(std::span<const double> weights) {
  // relative to the largest weight, so equal weights give exactly n
  double wmax = 0.0;
  for (double w : weights) wmax = std::max(wmax, w);
  if (!(wmax > 0.0)) throw AllZeroWeights();
  double s = 0.0;
  double s2 = 0.0;
  for (double w : weights) {
    const double r = w / wmax;
    s += r;
    s2 += r * r;
  }
  if (!(s2 > 0.0)) throw AllZeroWeights();
  return s * s / s2;
}

double bgr_psrf(const std::vector<std::vector<double>>& chains, bool split) {
  std::vector<std::span<const double>> parts;
  for (const auto& c : chains) {
    if (split) {
      const std::size_t half = c.size() / 2;
      parts.emplace_back(c.data(), half);
      parts.emplace_back(c.data() + (c.size() - half), half);
    } else {
      parts.emplace_back(c.data(), c.size());
    }
  }
  if (parts.size() < 2) throw ValidationError("PSRF needs at least two chains");
  const std::size_t n = parts.front().size();
  if (n < (split ? 5u : 10u)) throw ValidationError("PSRF needs chains of length >= 10");
  for (const auto& p : parts) {
    if (p.size() != n) throw ValidationError("PSRF needs chains of equal length");
  }

  const double m = static_cast<double>(parts.size());
  const double nd = static_cast<double>(n);
  std::vector<double> means;
  double w = 0.0;
  for (const auto& p : parts) {
    const double mu = mean_of(p);
    means.push_back(mu);
    w += centered_sum_sq(p, mu) / (nd - 1.0);
  }
  w /= m;
  if (!(w > 0.0)) throw ZeroVariance();
  const double grand = mean_of(means);
  const double b = nd * centered_sum_sq(means, grand) / (m - 1.0);
  return std::sqrt((nd - 1.0) / nd + b / (nd * w));
}

std::vector<double> extract(const ChainResult& chain, Quantity quantity) {
  std::vector<double> out;
  out.reserve(chain.draws.size());
  for (const auto& d : chain.draws) out.push_back(value_of(d, quantity));
  return out;
}

Efficiency efficiency(const ChainResult& chain, Quantity quantity) {
  if (chain.draws.empty()) throw EmptyChain();
  Efficiency eff;
  if (chain.weights) {
    eff.ess = ess_weights(*chain.weights);
  } else {
    const auto values = extract(chain, quantity);
    const EssEstimate est = ess_autocorr(values);
    eff.ess = est.value;
    eff.zero_variance = est.zero_variance;
  }
  eff.per_second = chain.elapsed_seconds > 0.0 ? eff.ess / chain.elapsed_seconds : 0.0;
  return eff;
}

double ess_per_thousand(const ChainResult& chain, Quantity quantity) {
  const Efficiency eff = efficiency(chain, quantity);
  const double denom = chain.weights
                           ? static_cast<double>(chain.acceptance.proposals)
                           : static_cast<double>(chain.draws.size());
  if (!(denom > 0.0)) throw EmptyChain();
  return 1000.0 * eff.ess / denom;
}

}  // namespace attrib
