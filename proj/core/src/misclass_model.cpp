#include "attrib/misclass_model.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "attrib/errors.hpp"

namespace attrib {

const BetaParams& PriorSet::operator[](std::size_t i) const {
  switch (i) {
    case 0:
      return p;
    case 1:
      return q;
    case 2:
      return e;
    case 3:
      return se;
    default:
      return sp;
  }
}

bool PriorSet::flat_cell_prior() const {
  return p == BetaParams{1.0, 1.0} && q == BetaParams{1.0, 1.0} && e == BetaParams{2.0, 2.0};
}

EtaVector eta_from_pi(const CellProbs& pi, double se, double sp) {
  return {se * pi[0] + (1.0 - sp) * pi[2], se * pi[1] + (1.0 - sp) * pi[3],
          sp * pi[2] + (1.0 - se) * pi[0], (1.0 - se) * pi[1] + sp * pi[3]};
}

EtaVector eta_from_theta(const Theta& theta) { return eta_from_pi(theta.pi(), theta.se, theta.sp); }

std::optional<CellProbs> pi_from_eta(const EtaVector& eta, double se, double sp) {
  const double det = se + sp - 1.0;
  if (std::fabs(det) <= 1e-12) throw SingularTest();
  // Diseased column: (eta11, eta21) from (pi11, pi21); non-diseased: (eta12, eta22).
  const CellProbs pi{(sp * eta[0] - (1.0 - sp) * eta[2]) / det,
                     (sp * eta[1] - (1.0 - sp) * eta[3]) / det,
                     (se * eta[2] - (1.0 - se) * eta[0]) / det,
                     (se * eta[3] - (1.0 - se) * eta[1]) / det};
  for (double v : pi) {
    if (!(v >= 0.0 && v <= 1.0)) return std::nullopt;
  }
  return pi;
}

bool in_constraint_set(const EtaVector& eta, double se, double sp) {
  return pi_from_eta(eta, se, sp).has_value();
}

Theta theta_from_pi(const CellProbs& pi, double se, double sp) {
  Theta t;
  t.e = pi[0] + pi[1];
  t.p = t.e > 0.0 ? pi[0] / t.e : 0.0;
  const double unexposed = pi[2] + pi[3];
  t.q = unexposed > 0.0 ? pi[2] / unexposed : 0.0;
  t.se = se;
  t.sp = sp;
  return t;
}

namespace {

bool interior(const Theta& theta) {
  for (double v : theta.as_array()) {
    if (!(v > 0.0 && v < 1.0)) return false;
  }
  return true;
}

}  // namespace

double log_posterior(const Theta& theta, const PosteriorContext& ctx) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (!interior(theta)) return kNegInf;
  const EtaVector eta = eta_from_theta(theta);
  const auto x = ctx.table.cells();
  double lp = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (!(eta[k] > 0.0)) return kNegInf;
    if (x[k] > 0) lp += static_cast<double>(x[k]) * std::log(eta[k]);
  }
  const auto v = theta.as_array();
  for (std::size_t i = 0; i < 5; ++i) lp += beta_log_density(v[i], ctx.priors[i]);
  return lp;
}

Jacobian jacobian_eta_theta(const Theta& theta) {
  const auto [p, q, e, se, sp] = theta.as_array();
  const CellProbs pi = theta.pi();
  // d pi / d(p, q, e), rows pi11, pi12, pi21, pi22.
  Eigen::Matrix<double, 4, 3> dpi;
  dpi << e, 0.0, p,          //
      -e, 0.0, 1.0 - p,      //
      0.0, 1.0 - e, -q,      //
      0.0, -(1.0 - e), -(1.0 - q);
  // d eta / d pi at fixed (Se, Sp).
  Eigen::Matrix4d deta_dpi;
  deta_dpi << se, 0.0, 1.0 - sp, 0.0,  //
      0.0, se, 0.0, 1.0 - sp,          //
      1.0 - se, 0.0, sp, 0.0,          //
      0.0, 1.0 - se, 0.0, sp;

  Jacobian j;
  j.leftCols<3>() = deta_dpi * dpi;
  j.col(3) << pi[0], pi[1], -pi[0], -pi[1];
  j.col(4) << -pi[2], -pi[3], pi[2], pi[3];
  return j;
}

Vector5 grad_log_posterior(const Theta& theta, const PosteriorContext& ctx) {
  if (!interior(theta)) throw OutOfSupport("gradient requested outside (0, 1)^5");
  const EtaVector eta = eta_from_theta(theta);
  const auto x = ctx.table.cells();
  Eigen::Vector4d score;
  for (int k = 0; k < 4; ++k) {
    if (!(eta[k] > 0.0)) throw OutOfSupport("eta has a non-positive cell");
    score(k) = static_cast<double>(x[k]) / eta[k];
  }
  Vector5 grad = jacobian_eta_theta(theta).transpose() * score;
  const auto v = theta.as_array();
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& pr = ctx.priors[i];
    grad(static_cast<Eigen::Index>(i)) += (pr.alpha - 1.0) / v[i] - (pr.beta - 1.0) / (1.0 - v[i]);
  }
  return grad;
}

Vector5 prior_hessian_diag(const Theta& theta, const PosteriorContext& ctx, HessianForm form) {
  if (!interior(theta)) throw OutOfSupport("prior Hessian requested outside (0, 1)^5");
  const double shift = form == HessianForm::Standard ? 1.0 : 0.0;
  const auto v = theta.as_array();
  Vector5 h;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& pr = ctx.priors[i];
    h(static_cast<Eigen::Index>(i)) = -(pr.alpha - shift) / (v[i] * v[i]) -
                                      (pr.beta - shift) / ((1.0 - v[i]) * (1.0 - v[i]));
  }
  return h;
}

Eigen::Vector4d fisher_cell_weights(const ContingencyTable& table) {
  const double n = static_cast<double>(table.total());
  const auto x = table.cells();
  Eigen::Vector4d d;
  for (int k = 0; k < 4; ++k) {
    const double cell = x[k] > 0 ? static_cast<double>(x[k]) : 0.5;
    d(k) = n * n / cell;
  }
  return d;
}

double importance_weight(const Theta& theta, const PriorSet& priors) {
  const double det = theta.se + theta.sp - 1.0;
  const double ridge = 1.0 / (det * det);
  if (priors.flat_cell_prior()) return ridge;
  // Density of the (p, q, e) prior relative to a flat prior on pi; |d pi / d(p,q,e)| = e(1-e).
  const double log_ratio = beta_log_density(theta.p, priors.p) +
                           beta_log_density(theta.q, priors.q) +
                           beta_log_density(theta.e, priors.e) -
                           std::log(theta.e * (1.0 - theta.e));
  return ridge * std::exp(log_ratio);
}

ChainResult limiting_posterior_sample(RngStream& rng, const EtaVector& eta,
                                      const PosteriorContext& ctx, std::int64_t n_draws,
                                      std::int64_t attempt_cap) {
  if (n_draws < 1) throw ValidationError("number of draws must be positive");
  ChainResult chain;
  chain.meta.sampler = "lpd";
  chain.meta.seed = rng.seed();
  chain.draws.reserve(static_cast<std::size_t>(n_draws));
  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(n_draws));

  const auto start = std::chrono::steady_clock::now();
  std::int64_t attempts = 0;
  std::int64_t consecutive = 0;
  while (static_cast<std::int64_t>(chain.draws.size()) < n_draws) {
    ++attempts;
    const double se = sample_beta(rng, ctx.priors.se);
    const double sp = sample_beta(rng, ctx.priors.sp);
    std::optional<CellProbs> pi;
    if (std::fabs(se + sp - 1.0) > 1e-12) pi = pi_from_eta(eta, se, sp);
    if (!pi) {
      if (++consecutive >= attempt_cap) {
        throw RejectionStall("limiting posterior: no admissible (Se, Sp) found");
      }
      continue;
    }
    consecutive = 0;
    const Theta theta = theta_from_pi(*pi, se, sp);
    chain.draws.push_back(make_draw(theta));
    weights.push_back(importance_weight(theta, ctx.priors));
  }
  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;
  chain.weights = std::move(weights);
  chain.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  chain.acceptance.proposals = attempts;
  chain.acceptance.accepted.fill(n_draws);
  chain.acceptance_all = chain.acceptance;
  chain.meta.iterations = attempts;
  return chain;
}

ChainResult limiting_posterior_sample(RngStream& rng, const Theta& theta_true,
                                      const PosteriorContext& ctx, std::int64_t n_draws,
                                      std::int64_t attempt_cap) {
  return limiting_posterior_sample(rng, eta_from_theta(theta_true), ctx, n_draws, attempt_cap);
}

}  // namespace attrib
