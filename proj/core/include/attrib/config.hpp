#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "attrib/core.hpp"
#include "attrib/designs.hpp"
#include "attrib/misclass_model.hpp"
#include "attrib/samplers.hpp"

namespace attrib {

/// Sampler names accepted in configs.
///   case-control / cohort: "closed_form", "constrained_gibbs"
///   cross-sectional: "importance", "mh_rw", "gibbs", "hmc", "adapted_jtj", "adapted_fisher"
struct BenchmarkSettings {
  std::vector<SamplerKind> samplers{kAllSamplers.begin(), kAllSamplers.end()};
  std::vector<std::int64_t> scales{1, 10, 100};
};

struct RunConfig {
  Design design = Design::CrossSectional;
  std::optional<PriorTarget> prior_target;
  /// Counts before `data_scale` is applied.
  ContingencyTable table;
  DesignPriorSpec design_priors;
  PriorSet cross_priors;
  std::string sampler;
  std::int64_t iterations = 10'000;
  std::int64_t burn_in = 0;
  int chains = 1;
  std::uint64_t seed = 1;
  TuningParams tuning;
  /// Which tuning keys the config set explicitly; the rest come from the
  /// benchmark tables, the pilot run or the HMC auto-tuner.
  bool tuning_c_set = false;
  bool tuning_tau_set = false;
  bool tuning_epsilon_set = false;
  bool tuning_steps_set = false;
  std::string output_path = ".";
  std::int64_t data_scale = 1;
  std::int64_t stall_cap = kDefaultStallCap;
  bool compute_bgr = false;
  bool psrf_split = false;
  BenchmarkSettings benchmark;

  /// The analysed table (counts times data_scale).
  ContingencyTable scaled_table() const { return table.scaled(data_scale); }
  bool cross_sectional() const { return design == Design::CrossSectional; }
};

/// Parses and validates a JSON run config, filling defaults. Unknown keys are
/// rejected. Throws ParseError (malformed document, with line/column or key)
/// or ValidationError (naming the violated rule).
RunConfig parse_config(std::string_view text);

/// Re-checks every RunConfig invariant. Throws ValidationError.
void validate(const RunConfig& config);

/// Applies ATTRIB_BAYES_SEED when set in the environment.
void apply_environment(RunConfig& config);

}  // namespace attrib
