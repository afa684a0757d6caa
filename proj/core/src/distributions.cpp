#include "attrib/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "attrib/errors.hpp"

namespace attrib {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

RngStream RngStream::substream(std::uint64_t seed, std::uint64_t index) {
  return RngStream(splitmix64(seed ^ splitmix64(index + 0x9E3779B97F4A7C15ULL)));
}

double RngStream::uniform() {
  // 53 random bits, shifted by half an ulp so 0 and 1 are never returned.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() { return normal_(engine_); }

double sample_log_gamma(RngStream& rng, double shape) {
  if (shape < 1.0) {
    // G(a) = G(a + 1) * U^(1/a)
    return sample_log_gamma(rng, shape + 1.0) + std::log(rng.uniform()) / shape;
  }
  // Marsaglia & Tsang (2000).
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
      return std::log(d) + std::log(v);
    }
  }
}

double sample_gamma(RngStream& rng, double shape) { return std::exp(sample_log_gamma(rng, shape)); }

double sample_beta(RngStream& rng, const BetaParams& params) {
  const double lx = sample_log_gamma(rng, params.alpha);
  const double ly = sample_log_gamma(rng, params.beta);
  const double m = std::max(lx, ly);
  const double lse = m + std::log(std::exp(lx - m) + std::exp(ly - m));
  return std::exp(lx - lse);
}

std::vector<double> sample_dirichlet(RngStream& rng, std::span<const double> alphas) {
  std::vector<double> logs(alphas.size());
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    logs[k] = sample_log_gamma(rng, alphas[k]);
    m = std::max(m, logs[k]);
  }
  std::vector<double> out(alphas.size());
  double total = 0.0;
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    out[k] = std::exp(logs[k] - m);
    total += out[k];
  }
  for (auto& v : out) v /= total;
  return out;
}

std::array<double, 4> sample_dirichlet4(RngStream& rng, const std::array<double, 4>& alphas) {
  const auto v = sample_dirichlet(rng, alphas);
  return {v[0], v[1], v[2], v[3]};
}

std::int64_t sample_binomial(RngStream& rng, std::int64_t trials, double prob) {
  if (trials <= 0 || prob <= 0.0) return 0;
  if (prob >= 1.0) return trials;
  std::binomial_distribution<std::int64_t> dist(trials, prob);
  return dist(rng.engine());
}

double log_beta_function(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double beta_log_density(double x, const BetaParams& params) {
  if (x < 0.0 || x > 1.0) return -std::numeric_limits<double>::infinity();
  const double a = params.alpha;
  const double b = params.beta;
  if (x == 0.0) {
    if (a == 1.0) return -log_beta_function(a, b);
    return a < 1.0 ? std::numeric_limits<double>::infinity()
                   : -std::numeric_limits<double>::infinity();
  }
  if (x == 1.0) {
    if (b == 1.0) return -log_beta_function(a, b);
    return b < 1.0 ? std::numeric_limits<double>::infinity()
                   : -std::numeric_limits<double>::infinity();
  }
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta_function(a, b);
}

namespace {

// Continued fraction for I_x(a, b) by the modified Lentz method.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

// I_x(a, b) via the continued fraction on whichever side converges fastest.
double incomplete_beta(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = a * std::log(x) + b * std::log1p(-x) - log_beta_function(a, b);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double initial_inverse_guess(double u, double a, double b) {
  if (a >= 1.0 && b >= 1.0) {
    const double pp = u < 0.5 ? u : 1.0 - u;
    const double t = std::sqrt(-2.0 * std::log(pp));
    double x = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t;
    if (u < 0.5) x = -x;
    const double al = (x * x - 3.0) / 6.0;
    const double h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0));
    const double w = (x * std::sqrt(al + h) / h) -
                     (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) * (al + 5.0 / 6.0 - 2.0 / (3.0 * h));
    return a / (a + b * std::exp(2.0 * w));
  }
  const double lna = std::log(a / (a + b));
  const double lnb = std::log(b / (a + b));
  const double t = std::exp(a * lna) / a;
  const double v = std::exp(b * lnb) / b;
  const double w = t + v;
  if (u < t / w) return std::pow(a * w * u, 1.0 / a);
  return 1.0 - std::pow(b * w * (1.0 - u), 1.0 / b);
}

// Solves I_x(a, b) = u for u <= 0.5 by Newton steps inside a shrinking bracket.
double invert_lower(double u, double a, double b) {
  double lo = 0.0;
  double hi = 1.0;
  double x = initial_inverse_guess(u, a, b);
  if (!(x > 0.0 && x < 1.0)) x = 0.5;
  const double log_norm = log_beta_function(a, b);
  for (int iter = 0; iter < 300; ++iter) {
    const double f = incomplete_beta(x, a, b) - u;
    if (f == 0.0) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double log_pdf = (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_norm;
    const double pdf = std::exp(log_pdf);
    double next = (pdf > 0.0 && std::isfinite(pdf)) ? x - f / pdf : -1.0;
    if (!(next > lo && next < hi)) {
      // Bisect; geometrically when the bracket spans orders of magnitude.
      if (lo == 0.0) {
        next = 0.01 * hi;
      } else if (hi > 4.0 * lo) {
        next = std::sqrt(lo * hi);
      } else {
        next = 0.5 * (lo + hi);
      }
    }
    const double step = std::fabs(next - x);
    x = next;
    if (step <= 1e-14 * x) break;
  }
  return x;
}

}  // namespace

double beta_cdf(double x, const BetaParams& params) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return std::clamp(incomplete_beta(x, params.alpha, params.beta), 0.0, 1.0);
}

double beta_inv_cdf(double u, const BetaParams& params) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  if (u <= 0.5) return invert_lower(u, params.alpha, params.beta);
  // Work with the mirrored distribution so the tail is resolved in relative terms.
  return 1.0 - invert_lower(1.0 - u, params.beta, params.alpha);
}

double sample_truncated_beta(RngStream& rng, const BetaParams& params, double lo, double hi) {
  lo = std::clamp(lo, 0.0, 1.0);
  hi = std::clamp(hi, 0.0, 1.0);
  if (!(lo < hi)) throw DegenerateInterval("truncation interval is empty");

  const double u = rng.uniform();
  const double f_lo = beta_cdf(lo, params);
  if (f_lo > 0.5) {
    // Upper tail: sample 1 - X with X ~ Beta(beta, alpha) on [1 - hi, 1 - lo].
    const BetaParams mirrored{params.beta, params.alpha};
    const double g_lo = beta_cdf(1.0 - hi, mirrored);
    const double g_hi = beta_cdf(1.0 - lo, mirrored);
    if (!(g_hi - g_lo >= 1e-300)) throw DegenerateInterval("truncated beta interval has no mass");
    const double x = 1.0 - beta_inv_cdf(g_lo + u * (g_hi - g_lo), mirrored);
    return std::clamp(x, lo, hi);
  }
  const double f_hi = beta_cdf(hi, params);
  if (!(f_hi - f_lo >= 1e-300)) throw DegenerateInterval("truncated beta interval has no mass");
  const double x = beta_inv_cdf(f_lo + u * (f_hi - f_lo), params);
  return std::clamp(x, lo, hi);
}

Eigen::VectorXd sample_mvnormal(RngStream& rng, const Eigen::VectorXd& mean,
                                const Eigen::MatrixXd& covariance) {
  const Eigen::Index dim = mean.size();
  if (covariance.rows() != dim || covariance.cols() != dim) {
    throw NotPSD("covariance dimensions do not match the mean");
  }
  const double scale = std::max(covariance.cwiseAbs().maxCoeff(), 1.0);
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw NotPSD("covariance is not symmetric");
  }

  auto factor = [&](const Eigen::MatrixXd& m) -> std::optional<Eigen::LDLT<Eigen::MatrixXd>> {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    if (ldlt.info() != Eigen::Success) return std::nullopt;
    if ((ldlt.vectorD().array() < -1e-12 * scale).any()) return std::nullopt;
    return ldlt;
  };

  auto ldlt = factor(covariance);
  if (!ldlt) {
    ldlt = factor(covariance + 1e-12 * Eigen::MatrixXd::Identity(dim, dim));
    if (!ldlt) throw NotPSD("covariance is not positive semi-definite");
  }

  Eigen::VectorXd z(dim);
  for (Eigen::Index i = 0; i < dim; ++i) z(i) = rng.normal();
  const Eigen::VectorXd sqrt_d = ldlt->vectorD().cwiseMax(0.0).cwiseSqrt();
  Eigen::VectorXd y = ldlt->matrixL() * sqrt_d.cwiseProduct(z);
  y = ldlt->transpositionsP().transpose() * y;
  return mean + y;
}

}  // namespace attrib
