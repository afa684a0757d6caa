#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace attrib {

enum class Design { CaseControl, Cohort, CrossSectional };

std::string to_string(Design design);

/// Observed 2x2 table. Rows index exposure (or test) status, columns disease.
///
///            D+    D-
///     E+    x11   x12
///     E-    x21   x22
struct ContingencyTable {
  std::int64_t x11 = 0;
  std::int64_t x12 = 0;
  std::int64_t x21 = 0;
  std::int64_t x22 = 0;
  Design design = Design::CrossSectional;

  std::int64_t total() const { return x11 + x12 + x21 + x22; }
  // Case-control margins (diseased / disease-free).
  std::int64_t n1() const { return x11 + x21; }
  std::int64_t n2() const { return x12 + x22; }
  // Cohort margins (exposed / unexposed).
  std::int64_t m1() const { return x11 + x12; }
  std::int64_t m2() const { return x21 + x22; }

  std::array<std::int64_t, 4> cells() const { return {x11, x12, x21, x22}; }

  /// Throws ValidationError on negative counts or an empty table.
  void validate() const;

  /// Every cell multiplied by `factor` (the n = 380 / 3800 / 38000 ladder).
  ContingencyTable scaled(std::int64_t factor) const;
};

/// The New Zealand leptospirosis abattoir data used throughout the examples.
ContingencyTable leptospirosis_table(Design design = Design::CrossSectional);

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;

  BetaParams() = default;
  /// Throws ValidationError unless both shape parameters are positive and finite.
  BetaParams(double a, double b);

  double mean() const { return alpha / (alpha + beta); }
  bool operator==(const BetaParams&) const = default;
};

/// p = P(D+|E+), q = P(D+|E-), e = P(E+).
struct PopulationParams {
  double p = 0.0;
  double q = 0.0;
  double e = 0.0;

  double disease_prevalence() const { return p * e + q * (1.0 - e); }
};

/// Cell probabilities (pi11, pi12, pi21, pi22), row-major over the 2x2 table.
using CellProbs = std::array<double, 4>;

/// Cross-sectional parameter vector with an imperfect exposure test.
struct Theta {
  double p = 0.5;
  double q = 0.5;
  double e = 0.5;
  double se = 1.0;
  double sp = 1.0;

  static constexpr int kDim = 5;

  PopulationParams population() const { return {p, q, e}; }
  CellProbs pi() const;
  std::array<double, kDim> as_array() const { return {p, q, e, se, sp}; }
  static Theta from_array(const std::array<double, kDim>& v) {
    return {v[0], v[1], v[2], v[3], v[4]};
  }
  bool in_unit_cube() const;
};

struct AttributableMeasures {
  double par = 0.0;
  double paf = 0.0;
};

double par(const PopulationParams& params);
/// Throws DegenerateDisease when P(D+) = 0.
double paf(const PopulationParams& params);
AttributableMeasures attributable_measures(const PopulationParams& params);

/// One posterior draw. `se`/`sp` are NaN for designs without a diagnostic test.
struct Draw {
  double p = 0.0;
  double q = 0.0;
  double e = 0.0;
  double se = 0.0;
  double sp = 0.0;
  double par = 0.0;
  double paf = 0.0;
};

/// Builds a draw from population parameters; PAF is NaN when P(D+) = 0.
Draw make_draw(const PopulationParams& params, double se, double sp);
Draw make_draw(const Theta& theta);

enum class Quantity { P, Q, E, Se, Sp, Par, Paf };

inline constexpr std::array<Quantity, 7> kAllQuantities = {
    Quantity::P,  Quantity::Q,   Quantity::E,  Quantity::Se,
    Quantity::Sp, Quantity::Par, Quantity::Paf};

std::string to_string(Quantity q);
double value_of(const Draw& draw, Quantity q);

struct AcceptanceStats {
  /// Accepted moves per parameter (p, q, e, Se, Sp). Block samplers credit all five.
  std::array<std::int64_t, 5> accepted{};
  std::int64_t proposals = 0;

  double rate(std::size_t component) const {
    return proposals > 0 ? static_cast<double>(accepted[component]) / static_cast<double>(proposals)
                         : 0.0;
  }
};

struct ChainMeta {
  std::string sampler;
  std::uint64_t seed = 0;
  std::int64_t chain_index = 0;
  std::int64_t burn_in = 0;
  /// Total iterations run (attempted draws for the importance sampler).
  std::int64_t iterations = 0;
};

struct ChainResult {
  std::vector<Draw> draws;
  /// Normalized importance weights (sum to 1), parallel to `draws`.
  std::optional<std::vector<double>> weights;
  /// Post-burn-in acceptance.
  AcceptanceStats acceptance;
  /// Acceptance over every iteration including burn-in.
  AcceptanceStats acceptance_all;
  double elapsed_seconds = 0.0;
  ChainMeta meta;

  bool weighted() const { return weights.has_value(); }
};

struct PosteriorSummary {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double ess = 0.0;
  std::optional<double> psrf;
  double ess_per_second = 0.0;
  /// Monte Carlo standard error of the mean (sd / sqrt(ess)).
  double mc_se = 0.0;
};

using DrawTransform = std::function<double(const Draw&)>;

/// Linear-interpolation quantile of a (possibly weighted) sample.
///
/// Sorted values x_0..x_{m-1} with positive weights w_k sit at cumulative
/// positions t_k = (w_0 + ... + w_{k-1}) / (w_0 + ... + w_{m-2}); the quantile
/// interpolates linearly between neighbouring t_k. With equal weights this is
/// t_k = k/(m-1), i.e. the usual "type 7" rule. Zero-weight values are dropped.
double weighted_quantile(std::vector<double> values, std::vector<double> weights, double prob);

/// Mean, equal-tailed 95% interval, ESS and MC error of `transform` over one chain.
PosteriorSummary summarize(const ChainResult& chain, const DrawTransform& transform);
PosteriorSummary summarize(const ChainResult& chain, Quantity quantity);

/// Pooled summary over several chains; PSRF is filled when there are >= 2
/// unweighted chains of equal length.
PosteriorSummary summarize(const std::vector<ChainResult>& chains, const DrawTransform& transform);
PosteriorSummary summarize(const std::vector<ChainResult>& chains, Quantity quantity);

}  // namespace attrib
