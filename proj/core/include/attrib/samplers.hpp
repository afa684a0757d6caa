#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "attrib/core.hpp"
#include "attrib/distributions.hpp"
#include "attrib/misclass_model.hpp"

namespace attrib {

struct TuningParams {
  /// Scale for the random-walk and adapted proposals.
  double c = 2.15;
  /// Ridge jitter added to the diagonal of the inner matrix.
  double tau = 0.1;
  /// Leapfrog step size.
  double epsilon = 0.01;
  int leapfrog_steps = 20;
  /// Componentwise posterior sd estimates for the random walk; zeros mean
  /// "estimate from a pilot run".
  std::array<double, 5> rw_scales{};
  HessianForm hessian_form = HessianForm::AsPublished;

  void validate() const;
};

/// Tuning constants used for the leptospirosis benchmark at sample-size
/// multiplier `scale` (1, 10 or 100; other scales use the nearest entry).
TuningParams table_tuning_rw(std::int64_t scale);
TuningParams table_tuning_jtj(std::int64_t scale);
TuningParams table_tuning_fisher(std::int64_t scale);

/// Latent correctly (y) and incorrectly (z) classified counts, cell order 11, 12, 21, 22.
struct LatentCounts {
  std::array<std::int64_t, 4> y{};
  std::array<std::int64_t, 4> z{};

  /// Checks x11 = y11 + z21, x12 = y12 + z22, x21 = y21 + z11, x22 = y22 + z12.
  bool consistent_with(const ContingencyTable& table) const;
};

/// Options shared by the MCMC samplers.
struct ChainOptions {
  std::int64_t iterations = 10'000;  // including burn-in
  std::int64_t burn_in = 1'000;
  /// Starting point; drawn from the prior when empty.
  std::optional<Theta> initial;
};

/// Metropolis acceptance test on a log ratio. Returns true to accept.
bool metropolis_accept(RngStream& rng, double log_ratio);

/// Chain starting point: (Se, Sp) from their priors and (p, q, e) from inverting
/// the observed cell proportions, retried until admissible. Falls back to plain
/// prior draws when the proportions cannot be inverted (e.g. empty cells).
Theta draw_initial_state(RngStream& rng, const PosteriorContext& ctx);

/// Importance sampler over the transparent parametrization (eta, Se, Sp).
/// `n_draws` attempted draws; only draws inside A are kept.
ChainResult importance_sampler(RngStream& rng, const PosteriorContext& ctx, std::int64_t n_draws);

/// Componentwise posterior sd from a short isotropic random walk (step 0.05).
std::array<double, 5> pilot_scales(RngStream& rng, const PosteriorContext& ctx, Theta& state,
                                   std::int64_t pilot_iterations = 1000);

/// Componentwise random-walk Metropolis with proposal sd c * sigma*_k.
ChainResult mh_random_walk(RngStream& rng, const PosteriorContext& ctx, const TuningParams& tuning,
                           const ChainOptions& options);

/// One latent-count draw given the current (pi, Se, Sp).
LatentCounts sample_latent_counts(RngStream& rng, const ContingencyTable& table, const CellProbs& pi,
                                  double se, double sp);

/// Data-augmented Gibbs sampler. Requires the flat-Dirichlet p, q, e priors.
ChainResult gibbs_data_augmented(RngStream& rng, const PosteriorContext& ctx,
                                 const ChainOptions& options);

struct LeapfrogResult {
  Vector5 position;
  Vector5 momentum;
  /// False when the trajectory left the support.
  bool valid = true;
};

/// L leapfrog steps of size epsilon on U = -log_posterior.
LeapfrogResult leapfrog(const Vector5& position, const Vector5& momentum,
                        const PosteriorContext& ctx, double epsilon, int steps);

/// Hamiltonian U(q) + |p|^2 / 2; +inf outside the support.
double hamiltonian(const Vector5& position, const Vector5& momentum, const PosteriorContext& ctx);

/// Without `options.initial`, the prior draw used as a start is first moved
/// into the posterior bulk by a short random walk.
ChainResult hmc(RngStream& rng, const PosteriorContext& ctx, const TuningParams& tuning,
                const ChainOptions& options);

/// c (tau I + J^T J)^-1 at theta.
Matrix5 proposal_covariance_jtj(const Theta& theta, const TuningParams& tuning);

/// c [tau I + J^T D J + P]^-1 at theta, where P = -diag(prior Hessian). When
/// the inner matrix is not positive definite its eigenvalues are floored at tau.
Matrix5 proposal_covariance_fisher(const Theta& theta, const PosteriorContext& ctx,
                                   const TuningParams& tuning);

/// Block Metropolis-Hastings with a state-dependent normal proposal built from
/// J^T J. The Hastings ratio includes the proposal densities in both directions.
ChainResult adapted_rw_jtj(RngStream& rng, const PosteriorContext& ctx, const TuningParams& tuning,
                           const ChainOptions& options);

/// As adapted_rw_jtj with the Fisher-information-plus-prior-curvature inner matrix.
ChainResult adapted_rw_fisher(RngStream& rng, const PosteriorContext& ctx,
                              const TuningParams& tuning, const ChainOptions& options);

enum class SamplerKind { Importance, RandomWalk, Gibbs, Hmc, AdaptedJtJ, AdaptedFisher };

inline constexpr std::array<SamplerKind, 6> kAllSamplers = {
    SamplerKind::Importance, SamplerKind::RandomWalk, SamplerKind::Gibbs,
    SamplerKind::Hmc,        SamplerKind::AdaptedJtJ, SamplerKind::AdaptedFisher};

std::string to_string(SamplerKind kind);
std::optional<SamplerKind> sampler_from_string(const std::string& name);
bool is_block_sampler(SamplerKind kind);

/// Runs any cross-sectional sampler. `options.iterations` is the number of
/// attempted draws for the importance sampler.
ChainResult run_sampler(SamplerKind kind, RngStream& rng, const PosteriorContext& ctx,
                        const TuningParams& tuning, const ChainOptions& options);

struct HmcTuningResult {
  bool tuned = false;
  double epsilon = 0.0;
  int leapfrog_steps = 0;
  double acceptance = 0.0;
  /// Last state of the trial runs, a warmed-up start for the main chain.
  Theta state;
};

struct HmcTuningOptions {
  /// Trial runs aim inside the 50-75% band so the main run stays in it.
  double target_low = 0.55;
  double target_high = 0.70;
  /// Integration time epsilon * L held fixed while epsilon is searched.
  double trajectory_length = 0.25;
  int max_leapfrog_steps = 100;
  std::int64_t trial_iterations = 1000;
  int max_rounds = 30;
};

/// Searches epsilon (with L = ceil(trajectory_length / epsilon)) until a short
/// trial run lands in the target acceptance band. Tuning fails when the band
/// needs more than `max_leapfrog_steps` steps.
HmcTuningResult tune_hmc(RngStream& rng, const PosteriorContext& ctx,
                         const HmcTuningOptions& options = {});

}  // namespace attrib
