#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "attrib/core.hpp"
#include "attrib/distributions.hpp"

namespace attrib {

/// Observed cell probabilities (eta11, eta12, eta21, eta22) of test status by
/// disease status.
using EtaVector = std::array<double, 4>;

using Vector5 = Eigen::Matrix<double, 5, 1>;
using Matrix5 = Eigen::Matrix<double, 5, 5>;
using Jacobian = Eigen::Matrix<double, 4, 5>;

/// Independent beta priors on (p, q, e, Se, Sp). Defaults reproduce the
/// leptospirosis analysis; the p, q, e defaults are equivalent to a flat
/// Dirichlet(1, 1, 1, 1) on the true cell probabilities.
struct PriorSet {
  BetaParams p{1.0, 1.0};
  BetaParams q{1.0, 1.0};
  BetaParams e{2.0, 2.0};
  BetaParams se{25.0, 3.0};
  BetaParams sp{30.0, 1.5};

  const BetaParams& operator[](std::size_t i) const;
  /// True when the p, q, e priors induce the flat Dirichlet on pi.
  bool flat_cell_prior() const;
  bool operator==(const PriorSet&) const = default;
};

struct PosteriorContext {
  ContingencyTable table;
  PriorSet priors;
};

EtaVector eta_from_pi(const CellProbs& pi, double se, double sp);
EtaVector eta_from_theta(const Theta& theta);

/// Solves the two 2x2 systems for pi given (eta, Se, Sp). Returns nullopt when
/// the solution leaves [0, 1] (outside the constraint set A). Throws
/// SingularTest when |Se + Sp - 1| <= 1e-12.
std::optional<CellProbs> pi_from_eta(const EtaVector& eta, double se, double sp);

/// Membership of (eta, Se, Sp) in A.
bool in_constraint_set(const EtaVector& eta, double se, double sp);

/// (p, q, e) from cell probabilities; Se and Sp are passed through.
Theta theta_from_pi(const CellProbs& pi, double se, double sp);

/// Multinomial log-likelihood plus independent log beta priors; -inf outside
/// the support.
double log_posterior(const Theta& theta, const PosteriorContext& ctx);

/// Gradient of log_posterior in (p, q, e, Se, Sp). Throws OutOfSupport unless
/// theta is interior and every eta is positive.
Vector5 grad_log_posterior(const Theta& theta, const PosteriorContext& ctx);

/// d eta / d theta; rows (eta11, eta12, eta21, eta22), columns (p, q, e, Se, Sp).
Jacobian jacobian_eta_theta(const Theta& theta);

enum class HessianForm {
  /// -alpha/theta^2 - beta/(1-theta)^2 (the default form).
  AsPublished,
  /// -(alpha-1)/theta^2 - (beta-1)/(1-theta)^2, the second derivative of the log density.
  Standard,
};

/// Diagonal of the log-prior Hessian. Throws OutOfSupport outside (0, 1)^5.
Vector5 prior_hessian_diag(const Theta& theta, const PosteriorContext& ctx,
                           HessianForm form = HessianForm::AsPublished);

/// Expected-information weights n^2 / x_ij (zero cells use 0.5 in place of x_ij).
Eigen::Vector4d fisher_cell_weights(const ContingencyTable& table);

/// Prior density ratio turning a draw from the convenience prior (flat
/// Dirichlet on eta, beta priors on Se and Sp) into a draw from the actual
/// prior. For the default p, q, e priors this is (Se + Sp - 1)^-2.
double importance_weight(const Theta& theta, const PriorSet& priors);

/// Draws from the limiting posterior: the prior restricted to the ridge
/// {theta : eta(theta) = eta}. Se, Sp are drawn from their priors, pi is
/// solved from eta, draws outside A are rejected, and retained draws carry
/// importance weights. Returns `n_draws` retained draws; at most `attempt_cap`
/// consecutive rejections are tolerated.
ChainResult limiting_posterior_sample(RngStream& rng, const EtaVector& eta,
                                      const PosteriorContext& ctx, std::int64_t n_draws,
                                      std::int64_t attempt_cap = 1'000'000);
ChainResult limiting_posterior_sample(RngStream& rng, const Theta& theta_true,
                                      const PosteriorContext& ctx, std::int64_t n_draws,
                                      std::int64_t attempt_cap = 1'000'000);

}  // namespace attrib
