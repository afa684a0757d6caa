#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "attrib/core.hpp"
#include "attrib/distributions.hpp"

namespace attrib {

/// Case-control parametrization: phi1 = P(E+|D+), phi2 = P(E+|D-), phi3 = P(D+).
struct PhiCaseControl {
  double phi1 = 0.0;
  double phi2 = 0.0;
  double phi3 = 0.0;
};

/// Maps (phi1, phi2, phi3) to (p, q, e) by Bayes' rule.
PopulationParams population_from_phi(const PhiCaseControl& phi);

/// PAR written directly in terms of phi (no intermediate p, q, e).
double casecontrol_par_direct(const PhiCaseControl& phi);

/// Recovers phi from population parameters (inverse of population_from_phi).
PhiCaseControl phi_from_population(const PopulationParams& params);

enum class PriorTarget { DiseasePrevalence, ExposureRate };

enum class DesignParam { Phi1, Phi2, Phi3, E, P, Q };

std::string to_string(DesignParam param);
std::optional<DesignParam> design_param_from_string(const std::string& name);

struct DesignPriorSpec {
  std::map<DesignParam, BetaParams> priors;
  PriorTarget target = PriorTarget::DiseasePrevalence;

  /// Throws ValidationError when the prior is missing.
  const BetaParams& at(DesignParam param) const;
};

inline constexpr std::int64_t kDefaultStallCap = 1'000'000;

/// Independent conjugate draws for a case-control study with a prior on P(D+).
ChainResult casecontrol_closed_form(RngStream& rng, const ContingencyTable& table,
                                    const DesignPriorSpec& priors, std::int64_t n_draws);

/// Gibbs sampler for a case-control study with a prior on P(E+).
///
/// e | phi is the prior truncated to [min(phi1, phi2), max(phi1, phi2)];
/// (phi1, phi2) | e are redrawn jointly from their unconstrained beta
/// posteriors until they straddle e. Throws RejectionStall after
/// `stall_cap` consecutive rejections.
ChainResult casecontrol_constrained_gibbs(RngStream& rng, const ContingencyTable& table,
                                          const DesignPriorSpec& priors, std::int64_t n_draws,
                                          std::int64_t burn_in = 1000,
                                          std::int64_t stall_cap = kDefaultStallCap);

/// Independent conjugate draws for a cohort study with a prior on P(E+).
ChainResult cohort_closed_form(RngStream& rng, const ContingencyTable& table,
                               const DesignPriorSpec& priors, std::int64_t n_draws);

/// Gibbs sampler for a cohort study with a prior on P(D+); mirror image of
/// casecontrol_constrained_gibbs with (p, q, phi3) in place of (phi1, phi2, e).
ChainResult cohort_constrained_gibbs(RngStream& rng, const ContingencyTable& table,
                                     const DesignPriorSpec& priors, std::int64_t n_draws,
                                     std::int64_t burn_in = 1000,
                                     std::int64_t stall_cap = kDefaultStallCap);

}  // namespace attrib
