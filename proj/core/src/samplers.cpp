#include "attrib/samplers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "attrib/errors.hpp"

namespace attrib {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Vector5 to_vec(const Theta& t) {
  Vector5 v;
  v << t.p, t.q, t.e, t.se, t.sp;
  return v;
}

Theta to_theta(const Vector5& v) { return {v(0), v(1), v(2), v(3), v(4)}; }

void check_options(const ChainOptions& options) {
  if (options.iterations < 1) throw ValidationError("iterations must be positive");
  if (options.burn_in < 0 || options.burn_in >= options.iterations) {
    throw ValidationError("burn-in must satisfy 0 <= burn_in < iterations");
  }
}

// Bookkeeping shared by the MCMC samplers.
class ChainRecorder {
 public:
  ChainRecorder(std::string name, const RngStream& rng, const ChainOptions& options)
      : options_(options) {
    chain_.meta.sampler = std::move(name);
    chain_.meta.seed = rng.seed();
    chain_.meta.burn_in = options.burn_in;
    chain_.meta.iterations = options.iterations;
    chain_.draws.reserve(static_cast<std::size_t>(options.iterations - options.burn_in));
  }

  bool post_burn_in(std::int64_t t) const { return t >= options_.burn_in; }

  void propose(std::int64_t t) {
    ++chain_.acceptance_all.proposals;
    if (post_burn_in(t)) ++chain_.acceptance.proposals;
  }

  void accept(std::int64_t t, std::size_t component) {
    ++chain_.acceptance_all.accepted[component];
    if (post_burn_in(t)) ++chain_.acceptance.accepted[component];
  }

  void accept_all(std::int64_t t) {
    for (std::size_t k = 0; k < 5; ++k) accept(t, k);
  }

  void record(std::int64_t t, const Theta& theta) {
    if (post_burn_in(t)) chain_.draws.push_back(make_draw(theta));
  }

  ChainResult finish(Clock::time_point start) {
    chain_.elapsed_seconds = seconds_since(start);
    return std::move(chain_);
  }

 private:
  ChainOptions options_;
  ChainResult chain_;
};

Theta starting_state(RngStream& rng, const PosteriorContext& ctx, const ChainOptions& options) {
  if (options.initial) {
    if (!std::isfinite(log_posterior(*options.initial, ctx))) {
      throw ValidationError("initial state has zero posterior density");
    }
    return *options.initial;
  }
  return draw_initial_state(rng, ctx);
}

}  // namespace

void TuningParams::validate() const {
  if (!(c > 0.0)) throw ValidationError("tuning c must be positive");
  if (!(tau > 0.0)) throw ValidationError("tuning tau must be positive");
  if (!(epsilon > 0.0)) throw ValidationError("tuning epsilon must be positive");
  if (leapfrog_steps < 1) throw ValidationError("tuning leapfrog_steps must be positive");
  for (double s : rw_scales) {
    if (!(s >= 0.0)) throw ValidationError("tuning rw_scales must be non-negative");
  }
}

namespace {

// Index into the three-row tuning tables: n = 380, 3800, 38000.
int tuning_row(std::int64_t scale) {
  const double s = static_cast<double>(std::max<std::int64_t>(scale, 1));
  if (s < std::sqrt(10.0)) return 0;
  if (s < std::sqrt(1000.0)) return 1;
  return 2;
}

}  // namespace

TuningParams table_tuning_rw(std::int64_t) {
  TuningParams t;
  t.c = 2.15;
  return t;
}

TuningParams table_tuning_jtj(std::int64_t scale) {
  static constexpr double kTau[] = {0.2, 0.1, 0.005};
  static constexpr double kC[] = {0.00075, 0.00009, 0.000005};
  TuningParams t;
  t.tau = kTau[tuning_row(scale)];
  t.c = kC[tuning_row(scale)];
  return t;
}

TuningParams table_tuning_fisher(std::int64_t scale) {
  static constexpr double kC[] = {0.5, 0.5, 0.3};
  TuningParams t;
  t.tau = 0.1;
  t.c = kC[tuning_row(scale)];
  return t;
}

bool LatentCounts::consistent_with(const ContingencyTable& table) const {
  return table.x11 == y[0] + z[2] && table.x12 == y[1] + z[3] && table.x21 == y[2] + z[0] &&
         table.x22 == y[3] + z[1];
}

bool metropolis_accept(RngStream& rng, double log_ratio) {
  if (std::isnan(log_ratio)) return false;
  if (log_ratio >= 0.0) return true;
  return std::log(rng.uniform()) < log_ratio;
}

Theta draw_initial_state(RngStream& rng, const PosteriorContext& ctx) {
  const auto x = ctx.table.cells();
  const double n = static_cast<double>(ctx.table.total());
  const EtaVector eta{x[0] / n, x[1] / n, x[2] / n, x[3] / n};
  for (int attempt = 0; attempt < 10'000; ++attempt) {
    const double se = sample_beta(rng, ctx.priors.se);
    const double sp = sample_beta(rng, ctx.priors.sp);
    if (se + sp - 1.0 <= 1e-6) continue;
    const auto pi = pi_from_eta(eta, se, sp);
    if (!pi) continue;
    const Theta t = theta_from_pi(*pi, se, sp);
    if (std::isfinite(log_posterior(t, ctx))) return t;
  }
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    Theta t{sample_beta(rng, ctx.priors.p), sample_beta(rng, ctx.priors.q),
            sample_beta(rng, ctx.priors.e), sample_beta(rng, ctx.priors.se),
            sample_beta(rng, ctx.priors.sp)};
    if (std::isfinite(log_posterior(t, ctx))) return t;
  }
  throw RejectionStall("no prior draw with positive posterior density");
}

ChainResult importance_sampler(RngStream& rng, const PosteriorContext& ctx, std::int64_t n_draws) {
  if (n_draws < 1) throw ValidationError("number of draws must be positive");
  ctx.table.validate();
  const auto x = ctx.table.cells();
  const std::array<double, 4> alphas{x[0] + 1.0, x[1] + 1.0, x[2] + 1.0, x[3] + 1.0};

  ChainResult chain;
  chain.meta.sampler = to_string(SamplerKind::Importance);
  chain.meta.seed = rng.seed();
  chain.meta.iterations = n_draws;
  std::vector<double> weights;

  const auto start = Clock::now();
  for (std::int64_t i = 0; i < n_draws; ++i) {
    const EtaVector eta = sample_dirichlet4(rng, alphas);
    const double se = sample_beta(rng, ctx.priors.se);
    const double sp = sample_beta(rng, ctx.priors.sp);
    if (std::fabs(se + sp - 1.0) <= 1e-12) continue;
    const auto pi = pi_from_eta(eta, se, sp);
    if (!pi) continue;
    const Theta theta = theta_from_pi(*pi, se, sp);
    chain.draws.push_back(make_draw(theta));
    weights.push_back(importance_weight(theta, ctx.priors));
  }
  double total = 0.0;
  for (double w : weights) total += w;
  if (total > 0.0) {
    for (double& w : weights) w /= total;
  }
  chain.weights = std::move(weights);
  chain.elapsed_seconds = seconds_since(start);
  chain.acceptance.proposals = n_draws;
  chain.acceptance.accepted.fill(static_cast<std::int64_t>(chain.draws.size()));
  chain.acceptance_all = chain.acceptance;
  return chain;
}

std::array<double, 5> pilot_scales(RngStream& rng, const PosteriorContext& ctx, Theta& state,
                                   std::int64_t pilot_iterations) {
  constexpr double kPilotStep = 0.05;
  auto v = state.as_array();
  double lp = log_posterior(state, ctx);
  std::array<double, 5> sum{};
  std::array<double, 5> sum_sq{};
  for (std::int64_t t = 0; t < pilot_iterations; ++t) {
    for (std::size_t k = 0; k < 5; ++k) {
      auto prop = v;
      prop[k] += kPilotStep * rng.normal();
      const double lp_prop = log_posterior(Theta::from_array(prop), ctx);
      if (metropolis_accept(rng, lp_prop - lp)) {
        v = prop;
        lp = lp_prop;
      }
    }
    for (std::size_t k = 0; k < 5; ++k) {
      sum[k] += v[k];
      sum_sq[k] += v[k] * v[k];
    }
  }
  state = Theta::from_array(v);
  std::array<double, 5> sd{};
  const double n = static_cast<double>(std::max<std::int64_t>(pilot_iterations, 1));
  for (std::size_t k = 0; k < 5; ++k) {
    const double mean = sum[k] / n;
    const double var = std::max(sum_sq[k] / n - mean * mean, 0.0);
    sd[k] = var > 0.0 ? std::sqrt(var * n / std::max(n - 1.0, 1.0)) : 0.01 * kPilotStep;
  }
  return sd;
}

ChainResult mh_random_walk(RngStream& rng, const PosteriorContext& ctx, const TuningParams& tuning,
                           const ChainOptions& options) {
  check_options(options);
  tuning.validate();
  const auto start = Clock::now();
  Theta state = starting_state(rng, ctx, options);

  std::array<double, 5> scales = tuning.rw_scales;
  if (std::any_of(scales.begin(), scales.end(), [](double s) { return s <= 0.0; })) {
    scales = pilot_scales(rng, ctx, state);
  }

  ChainRecorder rec(to_string(SamplerKind::RandomWalk), rng, options);
  auto v = state.as_array();
  double lp = log_posterior(state, ctx);
  for (std::int64_t t = 0; t < options.iterations; ++t) {
    rec.propose(t);
    for (std::size_t k = 0; k < 5; ++k) {
      auto prop = v;
      prop[k] += tuning.c * scales[k] * rng.normal();
      const double lp_prop = log_posterior(Theta::from_array(prop), ctx);
      if (metropolis_accept(rng, lp_prop - lp)) {
        v = prop;
        lp = lp_prop;
        rec.accept(t, k);
      }
    }
    rec.record(t, Theta::from_array(v));
  }
  return rec.finish(start);
}

LatentCounts sample_latent_counts(RngStream& rng, const ContingencyTable& table, const CellProbs& pi,
                                  double se, double sp) {
  auto share = [](double correct, double wrong) {
    const double total = correct + wrong;
    return total > 0.0 ? correct / total : 1.0;
  };
  LatentCounts lc;
  lc.y[0] = sample_binomial(rng, table.x11, share(se * pi[0], (1.0 - sp) * pi[2]));
  lc.y[1] = sample_binomial(rng, table.x12, share(se * pi[1], (1.0 - sp) * pi[3]));
  lc.y[2] = sample_binomial(rng, table.x21, share(sp * pi[2], (1.0 - se) * pi[0]));
  lc.y[3] = sample_binomial(rng, table.x22, share(sp * pi[3], (1.0 - se) * pi[1]));
  lc.z[2] = table.x11 - lc.y[0];
  lc.z[3] = table.x12 - lc.y[1];
  lc.z[0] = table.x21 - lc.y[2];
  lc.z[1] = table.x22 - lc.y[3];
  return lc;
}

ChainResult gibbs_data_augmented(RngStream& rng, const PosteriorContext& ctx,
                                 const ChainOptions& options) {
  check_options(options);
  if (!ctx.priors.flat_cell_prior()) {
    throw ValidationError("data-augmented Gibbs needs p, q ~ Beta(1,1) and e ~ Beta(2,2)");
  }
  const auto start = Clock::now();
  const Theta init = starting_state(rng, ctx, options);
  CellProbs pi = init.pi();
  double se = init.se;
  double sp = init.sp;

  ChainRecorder rec(to_string(SamplerKind::Gibbs), rng, options);
  for (std::int64_t t = 0; t < options.iterations; ++t) {
    const LatentCounts lc = sample_latent_counts(rng, ctx.table, pi, se, sp);
    const auto& y = lc.y;
    const auto& z = lc.z;
    pi = sample_dirichlet4(rng, {static_cast<double>(y[0] + z[0]) + 1.0,
                                 static_cast<double>(y[1] + z[1]) + 1.0,
                                 static_cast<double>(y[2] + z[2]) + 1.0,
                                 static_cast<double>(y[3] + z[3]) + 1.0});
    se = sample_beta(rng, {static_cast<double>(y[0] + y[1]) + ctx.priors.se.alpha,
                           static_cast<double>(z[0] + z[1]) + ctx.priors.se.beta});
    sp = sample_beta(rng, {static_cast<double>(y[2] + y[3]) + ctx.priors.sp.alpha,
                           static_cast<double>(z[2] + z[3]) + ctx.priors.sp.beta});
    rec.propose(t);
    rec.accept_all(t);
    rec.record(t, theta_from_pi(pi, se, sp));
  }
  return rec.finish(start);
}

namespace {

std::optional<Vector5> safe_gradient(const Vector5& position, const PosteriorContext& ctx) {
  try {
    Vector5 g = grad_log_posterior(to_theta(position), ctx);
    if (!g.allFinite()) return std::nullopt;
    return g;
  } catch (const OutOfSupport&) {
    return std::nullopt;
  }
}

}  // namespace

LeapfrogResult leapfrog(const Vector5& position, const Vector5& momentum,
                        const PosteriorContext& ctx, double epsilon, int steps) {
  LeapfrogResult out{position, momentum, true};
  auto grad = safe_gradient(out.position, ctx);
  if (!grad) {
    out.valid = false;
    return out;
  }
  // dp/dt = -dU/dq = grad log posterior.
  out.momentum += 0.5 * epsilon * *grad;
  for (int i = 1; i <= steps; ++i) {
    out.position += epsilon * out.momentum;
    grad = safe_gradient(out.position, ctx);
    if (!grad) {
      out.valid = false;
      return out;
    }
    out.momentum += (i < steps ? 1.0 : 0.5) * epsilon * *grad;
  }
  return out;
}

double hamiltonian(const Vector5& position, const Vector5& momentum, const PosteriorContext& ctx) {
  const double lp = log_posterior(to_theta(position), ctx);
  if (!std::isfinite(lp)) return std::numeric_limits<double>::infinity();
  return -lp + 0.5 * momentum.squaredNorm();
}

ChainResult hmc(RngStream& rng, const PosteriorContext& ctx, const TuningParams& tuning,
                const ChainOptions& options) {
  check_options(options);
  tuning.validate();
  const auto start = Clock::now();
  Theta start_state = starting_state(rng, ctx, options);
  if (!options.initial) pilot_scales(rng, ctx, start_state, 2000);
  Vector5 position = to_vec(start_state);

  ChainRecorder rec(to_string(SamplerKind::Hmc), rng, options);
  for (std::int64_t t = 0; t < options.iterations; ++t) {
    rec.propose(t);
    Vector5 momentum;
    for (int k = 0; k < 5; ++k) momentum(k) = rng.normal();
    const double h_old = hamiltonian(position, momentum, ctx);
    const LeapfrogResult traj = leapfrog(position, momentum, ctx, tuning.epsilon,
                                         tuning.leapfrog_steps);
    if (traj.valid) {
      const double h_new = hamiltonian(traj.position, traj.momentum, ctx);
      if (std::isfinite(h_new) && metropolis_accept(rng, h_old - h_new)) {
        position = traj.position;
        rec.accept_all(t);
      }
    }
    rec.record(t, to_theta(position));
  }
  return rec.finish(start);
}

namespace {

Matrix5 jtj_inner(const Theta& theta, const TuningParams& tuning) {
  const Jacobian j = jacobian_eta_theta(theta);
  return tuning.tau * Matrix5::Identity() + j.transpose() * j;
}

Matrix5 floor_eigenvalues(const Matrix5& m, double floor) {
  const Matrix5 sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix5> eig(sym);
  if (eig.info() != Eigen::Success) throw NotPSD("eigen-decomposition failed");
  const Vector5 values = eig.eigenvalues().cwiseMax(floor);
  return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

Matrix5 fisher_inner(const Theta& theta, const PosteriorContext& ctx, const TuningParams& tuning) {
  const Jacobian j = jacobian_eta_theta(theta);
  const Eigen::Vector4d d = fisher_cell_weights(ctx.table);
  // Prior precision is minus the log-prior Hessian.
  const Vector5 prior_precision = -prior_hessian_diag(theta, ctx, tuning.hessian_form);
  Matrix5 inner = j.transpose() * d.asDiagonal() * j;
  inner.diagonal() += prior_precision;
  inner.diagonal().array() += tuning.tau;
  if (!inner.allFinite()) throw NotPSD("proposal matrix is not finite");
  Eigen::LLT<Matrix5> llt(inner);
  if (llt.info() != Eigen::Success) inner = floor_eigenvalues(inner, tuning.tau);
  return inner;
}

// Proposal N(theta, c * inner^-1) stored through the Cholesky factor of the
// precision inner / c.
struct Proposal {
  Eigen::LLT<Matrix5> precision_llt;
  double half_log_det_precision = 0.0;

  static std::optional<Proposal> from_inner(const Matrix5& inner, double c) {
    Proposal p;
    p.precision_llt.compute(inner / c);
    if (p.precision_llt.info() != Eigen::Success) return std::nullopt;
    const Matrix5 l = p.precision_llt.matrixL();
    p.half_log_det_precision = l.diagonal().array().log().sum();
    if (!std::isfinite(p.half_log_det_precision)) return std::nullopt;
    return p;
  }

  Vector5 draw_offset(RngStream& rng) const {
    Vector5 z;
    for (int k = 0; k < 5; ++k) z(k) = rng.normal();
    // cov = (L L^T)^-1  =>  offset = L^-T z.
    return precision_llt.matrixU().solve(z);
  }

  double log_density(const Vector5& offset) const {
    const Vector5 w = precision_llt.matrixU() * offset;
    return half_log_det_precision - 0.5 * w.squaredNorm();
  }
};

template <typename InnerFn>
ChainResult adapted_block_mh(const char* name, RngStream& rng, const PosteriorContext& ctx,
                             const TuningParams& tuning, const ChainOptions& options,
                             InnerFn&& inner_at) {
  check_options(options);
  tuning.validate();
  const auto start = Clock::now();
  Theta state = starting_state(rng, ctx, options);
  double lp = log_posterior(state, ctx);

  auto proposal_at = [&](const Theta& theta) -> std::optional<Proposal> {
    try {
      return Proposal::from_inner(inner_at(theta), tuning.c);
    } catch (const NotPSD&) {
      return std::nullopt;
    }
  };

  auto current = proposal_at(state);
  if (!current) {
    // One jittered retry at the starting point before giving up.
    current = Proposal::from_inner(inner_at(state) + 1e-12 * Matrix5::Identity(), tuning.c);
    if (!current) throw NotPSD("proposal covariance is not positive definite at the start");
  }

  ChainRecorder rec(name, rng, options);
  for (std::int64_t t = 0; t < options.iterations; ++t) {
    rec.propose(t);
    const Vector5 offset = current->draw_offset(rng);
    const Theta cand = to_theta(to_vec(state) + offset);
    const double lp_cand = log_posterior(cand, ctx);
    if (std::isfinite(lp_cand)) {
      if (auto reverse = proposal_at(cand)) {
        const double log_q_forward = current->log_density(offset);
        const double log_q_reverse = reverse->log_density(-offset);
        if (metropolis_accept(rng, lp_cand - lp + log_q_reverse - log_q_forward)) {
          state = cand;
          lp = lp_cand;
          current = std::move(reverse);
          rec.accept_all(t);
        }
      }
    }
    rec.record(t, state);
  }
  return rec.finish(start);
}

}  // namespace

Matrix5 proposal_covariance_jtj(const Theta& theta, const TuningParams& tuning) {
  return tuning.c * jtj_inner(theta, tuning).inverse();
}

Matrix5 proposal_covariance_fisher(const Theta& theta, const PosteriorContext& ctx,
                                   const TuningParams& tuning) {
  return tuning.c * fisher_inner(theta, ctx, tuning).inverse();
}

ChainResult adapted_rw_jtj(RngStream& rng, const PosteriorContext& ctx, const TuningParams& tuning,
                           const ChainOptions& options) {
  return adapted_block_mh(to_string(SamplerKind::AdaptedJtJ).c_str(), rng, ctx, tuning, options,
                          [&](const Theta& th) { return jtj_inner(th, tuning); });
}

ChainResult adapted_rw_fisher(RngStream& rng, const PosteriorContext& ctx,
                              const TuningParams& tuning, const ChainOptions& options) {
  return adapted_block_mh(to_string(SamplerKind::AdaptedFisher).c_str(), rng, ctx, tuning, options,
                          [&](const Theta& th) { return fisher_inner(th, ctx, tuning); });
}

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::Importance:
      return "importance";
    case SamplerKind::RandomWalk:
      return "mh_rw";
    case SamplerKind::Gibbs:
      return "gibbs";
    case SamplerKind::Hmc:
      return "hmc";
    case SamplerKind::AdaptedJtJ:
      return "adapted_jtj";
    case SamplerKind::AdaptedFisher:
      return "adapted_fisher";
  }
  return "unknown";
}

std::optional<SamplerKind> sampler_from_string(const std::string& name) {
  for (auto k : kAllSamplers) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

bool is_block_sampler(SamplerKind kind) { return kind != SamplerKind::RandomWalk; }

ChainResult run_sampler(SamplerKind kind, RngStream& rng, const PosteriorContext& ctx,
                        const TuningParams& tuning, const ChainOptions& options) {
  switch (kind) {
    case SamplerKind::Importance:
      return importance_sampler(rng, ctx, options.iterations);
    case SamplerKind::RandomWalk:
      return mh_random_walk(rng, ctx, tuning, options);
    case SamplerKind::Gibbs:
      return gibbs_data_augmented(rng, ctx, options);
    case SamplerKind::Hmc:
      return hmc(rng, ctx, tuning, options);
    case SamplerKind::AdaptedJtJ:
      return adapted_rw_jtj(rng, ctx, tuning, options);
    case SamplerKind::AdaptedFisher:
      return adapted_rw_fisher(rng, ctx, tuning, options);
  }
  throw ValidationError("unknown sampler");
}

HmcTuningResult tune_hmc(RngStream& rng, const PosteriorContext& ctx,
                         const HmcTuningOptions& options) {
  HmcTuningResult result;
  Theta state = draw_initial_state(rng, ctx);
  // Walk towards the posterior bulk before measuring acceptance.
  pilot_scales(rng, ctx, state, 2000);
  result.state = state;

  const double target = 0.5 * (options.target_low + options.target_high);
  double eps = options.trajectory_length / 10.0;
  double eps_low = 0.0;   // largest epsilon known to be too small (acceptance too high)
  double eps_high = 0.0;  // smallest epsilon known to be too large
  for (int round = 0; round < options.max_rounds; ++round) {
    int steps = static_cast<int>(std::ceil(options.trajectory_length / eps));
    if (steps > options.max_leapfrog_steps) {
      // Try the largest trajectory the budget allows before giving up.
      const double eps_cap = options.trajectory_length / options.max_leapfrog_steps;
      if (eps_high > 0.0 && eps_high <= eps_cap * (1.0 + 1e-12)) {
        result.epsilon = eps;
        result.leapfrog_steps = steps;
        return result;
      }
      eps = eps_cap;
      steps = options.max_leapfrog_steps;
    }
    TuningParams trial;
    trial.epsilon = eps;
    trial.leapfrog_steps = steps;
    ChainOptions trial_opts;
    trial_opts.iterations = options.trial_iterations;
    trial_opts.burn_in = 0;
    trial_opts.initial = state;
    const ChainResult run = hmc(rng, ctx, trial, trial_opts);
    const Draw& last = run.draws.back();
    state = Theta{last.p, last.q, last.e, last.se, last.sp};
    const double acc = run.acceptance.rate(0);
    result.acceptance = acc;
    result.epsilon = eps;
    result.leapfrog_steps = steps;
    result.state = state;
    if (acc >= options.target_low && acc <= options.target_high) {
      result.tuned = true;
      return result;
    }
    if (acc < target) {
      eps_high = eps;
      eps = eps_low > 0.0 ? std::sqrt(eps_low * eps_high) : eps * 0.5;
    } else {
      eps_low = eps;
      eps = eps_high > 0.0 ? std::sqrt(eps_low * eps_high) : eps * 1.5;
    }
  }
  return result;
}

}  // namespace attrib
