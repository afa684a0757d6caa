#include "attrib/designs.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "attrib/errors.hpp"

namespace attrib {

PopulationParams population_from_phi(const PhiCaseControl& phi) {
  const double exposed_diseased = phi.phi1 * phi.phi3;
  const double e = exposed_diseased + phi.phi2 * (1.0 - phi.phi3);
  const double unexposed_diseased = (1.0 - phi.phi1) * phi.phi3;
  const double unexposed = unexposed_diseased + (1.0 - phi.phi2) * (1.0 - phi.phi3);
  PopulationParams out;
  out.e = e;
  out.p = e > 0.0 ? exposed_diseased / e : 0.0;
  out.q = unexposed > 0.0 ? unexposed_diseased / unexposed : 0.0;
  return out;
}

double casecontrol_par_direct(const PhiCaseControl& phi) {
  const double f1 = phi.phi1;
  const double f2 = phi.phi2;
  const double f3 = phi.phi3;
  const double denom = (1.0 - f1) * f3 + (1.0 - f2) * (1.0 - f3);
  if (denom <= 0.0) return f1 * f3;
  return f1 * f3 - (1.0 - f1) * f3 * (f1 * f3 + f2 * (1.0 - f3)) / denom;
}

PhiCaseControl phi_from_population(const PopulationParams& params) {
  const double pd = params.disease_prevalence();
  PhiCaseControl phi;
  phi.phi3 = pd;
  phi.phi1 = pd > 0.0 ? params.p * params.e / pd : 0.0;
  phi.phi2 = pd < 1.0 ? (1.0 - params.p) * params.e / (1.0 - pd) : 0.0;
  return phi;
}

std::string to_string(DesignParam param) {
  switch (param) {
    case DesignParam::Phi1:
      return "phi1";
    case DesignParam::Phi2:
      return "phi2";
    case DesignParam::Phi3:
      return "phi3";
    case DesignParam::E:
      return "e";
    case DesignParam::P:
      return "p";
    case DesignParam::Q:
      return "q";
  }
  return "unknown";
}

std::optional<DesignParam> design_param_from_string(const std::string& name) {
  for (auto p : {DesignParam::Phi1, DesignParam::Phi2, DesignParam::Phi3, DesignParam::E,
                 DesignParam::P, DesignParam::Q}) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

const BetaParams& DesignPriorSpec::at(DesignParam param) const {
  const auto it = priors.find(param);
  if (it == priors.end()) {
    throw ValidationError("missing prior for " + to_string(param));
  }
  return it->second;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_design(const ContingencyTable& table, Design design, const DesignPriorSpec& priors,
                    PriorTarget target) {
  table.validate();
  if (table.design != design) {
    throw ValidationError("table design is " + to_string(table.design) + ", expected " +
                          to_string(design));
  }
  if (priors.target != target) throw ValidationError("prior target does not match the sampler");
}

ChainResult make_chain(const char* name, RngStream& rng, std::int64_t n_draws,
                       std::int64_t burn_in) {
  if (n_draws < 1) throw ValidationError("number of draws must be positive");
  if (burn_in < 0) throw ValidationError("burn-in must be non-negative");
  ChainResult chain;
  chain.draws.reserve(static_cast<std::size_t>(n_draws));
  chain.meta.sampler = name;
  chain.meta.seed = rng.seed();
  chain.meta.burn_in = burn_in;
  chain.meta.iterations = n_draws + burn_in;
  return chain;
}

void credit_all(AcceptanceStats& stats, std::int64_t count) {
  stats.proposals += count;
  for (auto& a : stats.accepted) a += count;
}

Draw design_draw(const PopulationParams& pop) {
  return make_draw(pop, std::numeric_limits<double>::quiet_NaN(),
                   std::numeric_limits<double>::quiet_NaN());
}

// Shared engine of both constrained samplers. `a` and `b` are the two
// parameters with unconstrained beta posteriors, `c` is the parameter whose
// prior is truncated to [min(a, b), max(a, b)].
template <typename Emit>
void constrained_gibbs(RngStream& rng, const BetaParams& post_a, const BetaParams& post_b,
                       const BetaParams& prior_c, std::int64_t n_draws, std::int64_t burn_in,
                       std::int64_t stall_cap, Emit&& emit) {
  double a = sample_beta(rng, post_a);
  double b = sample_beta(rng, post_b);
  for (std::int64_t tries = 0; a == b; ++tries) {
    if (tries >= stall_cap) throw RejectionStall("could not initialise with unequal values");
    a = sample_beta(rng, post_a);
    b = sample_beta(rng, post_b);
  }

  for (std::int64_t t = 0; t < burn_in + n_draws; ++t) {
    const double c = sample_truncated_beta(rng, prior_c, std::min(a, b), std::max(a, b));
    std::int64_t rejections = 0;
    for (;;) {
      const double a_new = sample_beta(rng, post_a);
      const double b_new = sample_beta(rng, post_b);
      if ((a_new - c) * (b_new - c) < 0.0) {
        a = a_new;
        b = b_new;
        break;
      }
      if (++rejections >= stall_cap) {
        throw RejectionStall("joint redraw rejected " + std::to_string(rejections) +
                             " times in a row");
      }
    }
    if (t >= burn_in) emit(a, b, c);
  }
}

}  // namespace

ChainResult casecontrol_closed_form(RngStream& rng, const ContingencyTable& table,
                                    const DesignPriorSpec& priors, std::int64_t n_draws) {
  require_design(table, Design::CaseControl, priors, PriorTarget::DiseasePrevalence);
  const auto& pr1 = priors.at(DesignParam::Phi1);
  const auto& pr2 = priors.at(DesignParam::Phi2);
  const auto& pr3 = priors.at(DesignParam::Phi3);
  const BetaParams post1{pr1.alpha + table.x11, pr1.beta + table.n1() - table.x11};
  const BetaParams post2{pr2.alpha + table.x12, pr2.beta + table.n2() - table.x12};

  ChainResult chain = make_chain("closed_form", rng, n_draws, 0);
  const auto start = Clock::now();
  for (std::int64_t i = 0; i < n_draws; ++i) {
    PhiCaseControl phi;
    phi.phi1 = sample_beta(rng, post1);
    phi.phi2 = sample_beta(rng, post2);
    phi.phi3 = sample_beta(rng, pr3);
    chain.draws.push_back(design_draw(population_from_phi(phi)));
  }
  chain.elapsed_seconds = seconds_since(start);
  credit_all(chain.acceptance, n_draws);
  chain.acceptance_all = chain.acceptance;
  return chain;
}

ChainResult casecontrol_constrained_gibbs(RngStream& rng, const ContingencyTable& table,
                                          const DesignPriorSpec& priors, std::int64_t n_draws,
                                          std::int64_t burn_in, std::int64_t stall_cap) {
  require_design(table, Design::CaseControl, priors, PriorTarget::ExposureRate);
  const auto& pr1 = priors.at(DesignParam::Phi1);
  const auto& pr2 = priors.at(DesignParam::Phi2);
  const auto& pr_e = priors.at(DesignParam::E);
  const BetaParams post1{pr1.alpha + table.x11, pr1.beta + table.n1() - table.x11};
  const BetaParams post2{pr2.alpha + table.x12, pr2.beta + table.n2() - table.x12};

  ChainResult chain = make_chain("constrained_gibbs", rng, n_draws, burn_in);
  const auto start = Clock::now();
  constrained_gibbs(rng, post1, post2, pr_e, n_draws, burn_in, stall_cap,
                    [&](double phi1, double phi2, double e) {
                      // (phi1 - e)(phi2 - e) < 0 guarantees phi1 != phi2.
                      PhiCaseControl phi{phi1, phi2, (e - phi2) / (phi1 - phi2)};
                      phi.phi3 = std::clamp(phi.phi3, 0.0, 1.0);
                      PopulationParams pop = population_from_phi(phi);
                      pop.e = e;
                      chain.draws.push_back(design_draw(pop));
                    });
  chain.elapsed_seconds = seconds_since(start);
  credit_all(chain.acceptance, n_draws);
  credit_all(chain.acceptance_all, n_draws + burn_in);
  return chain;
}

ChainResult cohort_closed_form(RngStream& rng, const ContingencyTable& table,
                               const DesignPriorSpec& priors, std::int64_t n_draws) {
  require_design(table, Design::Cohort, priors, PriorTarget::ExposureRate);
  const auto& pr_p = priors.at(DesignParam::P);
  const auto& pr_q = priors.at(DesignParam::Q);
  const auto& pr_e = priors.at(DesignParam::E);
  const BetaParams post_p{pr_p.alpha + table.x11, pr_p.beta + table.m1() - table.x11};
  const BetaParams post_q{pr_q.alpha + table.x21, pr_q.beta + table.m2() - table.x21};

  ChainResult chain = make_chain("closed_form", rng, n_draws, 0);
  const auto start = Clock::now();
  for (std::int64_t i = 0; i < n_draws; ++i) {
    PopulationParams pop;
    pop.p = sample_beta(rng, post_p);
    pop.q = sample_beta(rng, post_q);
    pop.e = sample_beta(rng, pr_e);
    chain.draws.push_back(design_draw(pop));
  }
  chain.elapsed_seconds = seconds_since(start);
  credit_all(chain.acceptance, n_draws);
  chain.acceptance_all = chain.acceptance;
  return chain;
}

ChainResult cohort_constrained_gibbs(RngStream& rng, const ContingencyTable& table,
                                     const DesignPriorSpec& priors, std::int64_t n_draws,
                                     std::int64_t burn_in, std::int64_t stall_cap) {
  require_design(table, Design::Cohort, priors, PriorTarget::DiseasePrevalence);
  const auto& pr_p = priors.at(DesignParam::P);
  const auto& pr_q = priors.at(DesignParam::Q);
  const auto& pr3 = priors.at(DesignParam::Phi3);
  const BetaParams post_p{pr_p.alpha + table.x11, pr_p.beta + table.m1() - table.x11};
  const BetaParams post_q{pr_q.alpha + table.x21, pr_q.beta + table.m2() - table.x21};

  ChainResult chain = make_chain("constrained_gibbs", rng, n_draws, burn_in);
  const auto start = Clock::now();
  constrained_gibbs(rng, post_p, post_q, pr3, n_draws, burn_in, stall_cap,
                    [&](double p, double q, double phi3) {
                      PopulationParams pop{p, q, std::clamp((phi3 - q) / (p - q), 0.0, 1.0)};
                      chain.draws.push_back(design_draw(pop));
                    });
  chain.elapsed_seconds = seconds_since(start);
  credit_all(chain.acceptance, n_draws);
  credit_all(chain.acceptance_all, n_draws + burn_in);
  return chain;
}

}  // namespace attrib
