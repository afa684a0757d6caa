#include "attrib/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "attrib/diagnostics.hpp"
#include "attrib/errors.hpp"

namespace attrib {

std::string to_string(Design design) {
  switch (design) {
    case Design::CaseControl:
      return "case_control";
    case Design::Cohort:
      return "cohort";
    case Design::CrossSectional:
      return "cross_sectional";
  }
  return "unknown";
}

void ContingencyTable::validate() const {
  if (x11 < 0 || x12 < 0 || x21 < 0 || x22 < 0) {
    throw ValidationError("contingency table counts must be non-negative");
  }
  if (total() < 1) {
    throw ValidationError("contingency table must contain at least one observation");
  }
}

ContingencyTable ContingencyTable::scaled(std::int64_t factor) const {
  if (factor < 1) throw ValidationError("data scale must be >= 1");
  return {x11 * factor, x12 * factor, x21 * factor, x22 * factor, design};
}

ContingencyTable leptospirosis_table(Design design) { return {22, 25, 82, 251, design}; }

BetaParams::BetaParams(double a, double b) : alpha(a), beta(b) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw ValidationError("beta parameters must be positive and finite");
  }
}

CellProbs Theta::pi() const {
  return {p * e, (1.0 - p) * e, q * (1.0 - e), (1.0 - q) * (1.0 - e)};
}

bool Theta::in_unit_cube() const {
  for (double v : as_array()) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
  }
  return true;
}

double par(const PopulationParams& params) { return params.e * (params.p - params.q); }

double paf(const PopulationParams& params) {
  const double pd = params.disease_prevalence();
  if (pd <= 0.0) throw DegenerateDisease();
  return par(params) / pd;
}

AttributableMeasures attributable_measures(const PopulationParams& params) {
  return {par(params), paf(params)};
}

Draw make_draw(const PopulationParams& params, double se, double sp) {
  Draw d;
  d.p = params.p;
  d.q = params.q;
  d.e = params.e;
  d.se = se;
  d.sp = sp;
  d.par = par(params);
  const double pd = params.disease_prevalence();
  d.paf = pd > 0.0 ? d.par / pd : std::numeric_limits<double>::quiet_NaN();
  return d;
}

Draw make_draw(const Theta& theta) { return make_draw(theta.population(), theta.se, theta.sp); }

std::string to_string(Quantity q) {
  switch (q) {
    case Quantity::P:
      return "p";
    case Quantity::Q:
      return "q";
    case Quantity::E:
      return "e";
    case Quantity::Se:
      return "se";
    case Quantity::Sp:
      return "sp";
    case Quantity::Par:
      return "par";
    case Quantity::Paf:
      return "paf";
  }
  return "unknown";
}

double value_of(const Draw& draw, Quantity q) {
  switch (q) {
    case Quantity::P:
      return draw.p;
    case Quantity::Q:
      return draw.q;
    case Quantity::E:
      return draw.e;
    case Quantity::Se:
      return draw.se;
    case Quantity::Sp:
      return draw.sp;
    case Quantity::Par:
      return draw.par;
    case Quantity::Paf:
      return draw.paf;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double weighted_quantile(std::vector<double> values, std::vector<double> weights, double prob) {
  if (values.empty()) throw EmptyChain();
  if (weights.empty()) weights.assign(values.size(), 1.0);

  std::vector<std::size_t> order;
  order.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (weights[i] > 0.0) order.push_back(i);
  }
  if (order.empty()) throw AllZeroWeights();
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  const std::size_t m = order.size();
  if (m == 1 || prob <= 0.0) return values[order.front()];
  if (prob >= 1.0) return values[order.back()];

  // Exclusive cumulative weights; the last value sits at position 1.
  std::vector<double> position(m);
  double cumulative = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    position[k] = cumulative;
    cumulative += weights[order[k]];
  }
  const double span = position[m - 1];
  const double target = prob * span;

  const auto it = std::upper_bound(position.begin(), position.end(), target);
  const std::size_t hi = static_cast<std::size_t>(it - position.begin());
  if (hi >= m) return values[order.back()];
  const std::size_t lo = hi - 1;
  const double gap = position[hi] - position[lo];
  const double frac = gap > 0.0 ? (target - position[lo]) / gap : 0.0;
  const double a = values[order[lo]];
  const double b = values[order[hi]];
  return a + frac * (b - a);
}

namespace {

struct Sample {
  std::vector<double> values;
  std::vector<double> weights;  // empty when unweighted
};

Sample collect(const ChainResult& chain, const DrawTransform& transform) {
  Sample s;
  s.values.reserve(chain.draws.size());
  for (const auto& d : chain.draws) s.values.push_back(transform(d));
  if (chain.weights) {
    if (chain.weights->size() != chain.draws.size()) {
      throw Error("weights and draws differ in length");
    }
    // Scale by the largest weight so that equal weights become exactly 1.
    const double wmax = *std::max_element(chain.weights->begin(), chain.weights->end());
    if (!(wmax > 0.0)) throw AllZeroWeights();
    s.weights.reserve(chain.weights->size());
    for (double w : *chain.weights) s.weights.push_back(w / wmax);
  }
  return s;
}

// Accumulates offsets from the first counted value so a constant sample
// returns that value exactly.
double weighted_mean(const std::vector<double>& values, const std::vector<double>& weights) {
  double shift = 0.0;
  bool have_shift = false;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w == 0.0) continue;
    if (!have_shift) {
      shift = values[i];
      have_shift = true;
    }
    num += w * (values[i] - shift);
    den += w;
  }
  return shift + num / den;
}

double weighted_sd(const std::vector<double>& values, const std::vector<double>& weights,
                   double mean) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w == 0.0) continue;
    num += w * (values[i] - mean) * (values[i] - mean);
    den += w;
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

double sample_ess(const Sample& s) {
  if (!s.weights.empty()) return ess_weights(s.weights);
  if (s.values.size() < 10) return static_cast<double>(s.values.size());
  return ess_autocorr(s.values).value;
}

}  // namespace

PosteriorSummary summarize(const ChainResult& chain, const DrawTransform& transform) {
  if (chain.draws.empty()) throw EmptyChain();
  const Sample s = collect(chain, transform);

  PosteriorSummary out;
  out.mean = weighted_mean(s.values, s.weights);
  out.ci_low = weighted_quantile(s.values, s.weights, 0.025);
  out.ci_high = weighted_quantile(s.values, s.weights, 0.975);
  out.ess = sample_ess(s);
  out.ess_per_second = chain.elapsed_seconds > 0.0 ? out.ess / chain.elapsed_seconds : 0.0;
  out.mc_se = out.ess > 0.0 ? weighted_sd(s.values, s.weights, out.mean) / std::sqrt(out.ess) : 0.0;
  return out;
}

PosteriorSummary summarize(const ChainResult& chain, Quantity quantity) {
  return summarize(chain, [quantity](const Draw& d) { return value_of(d, quantity); });
}

PosteriorSummary summarize(const std::vector<ChainResult>& chains, const DrawTransform& transform) {
  if (chains.empty()) throw EmptyChain();
  if (chains.size() == 1) return summarize(chains.front(), transform);

  Sample pooled;
  double ess = 0.0;
  double seconds = 0.0;
  bool any_weighted = false;
  std::vector<std::vector<double>> per_chain;
  for (const auto& chain : chains) {
    if (chain.draws.empty()) throw EmptyChain();
    Sample s = collect(chain, transform);
    ess += sample_ess(s);
    seconds += chain.elapsed_seconds;
    any_weighted = any_weighted || !s.weights.empty();
    if (s.weights.empty()) s.weights.assign(s.values.size(), 1.0);
    pooled.values.insert(pooled.values.end(), s.values.begin(), s.values.end());
    pooled.weights.insert(pooled.weights.end(), s.weights.begin(), s.weights.end());
    per_chain.push_back(std::move(s.values));
  }
  if (!any_weighted) pooled.weights.clear();

  PosteriorSummary out;
  out.mean = weighted_mean(pooled.values, pooled.weights);
  out.ci_low = weighted_quantile(pooled.values, pooled.weights, 0.025);
  out.ci_high = weighted_quantile(pooled.values, pooled.weights, 0.975);
  out.ess = ess;
  out.ess_per_second = seconds > 0.0 ? ess / seconds : 0.0;
  out.mc_se = ess > 0.0 ? weighted_sd(pooled.values, pooled.weights, out.mean) / std::sqrt(ess) : 0.0;

  if (!any_weighted) {
    const auto len = per_chain.front().size();
    const bool equal = std::all_of(per_chain.begin(), per_chain.end(),
                                   [len](const auto& c) { return c.size() == len; });
    if (equal && len >= 10) {
      try {
        out.psrf = bgr_psrf(per_chain);
      } catch (const ZeroVariance&) {
        out.psrf.reset();
      }
    }
  }
  return out;
}

PosteriorSummary summarize(const std::vector<ChainResult>& chains, Quantity quantity) {
  return summarize(chains, [quantity](const Draw& d) { return value_of(d, quantity); });
}

}  // namespace attrib
