#include "attrib/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <thread>

#include "attrib/designs.hpp"
#include "attrib/diagnostics.hpp"
#include "attrib/errors.hpp"
#include "attrib/samplers.hpp"
#include "parallel.hpp"

namespace attrib {

std::vector<Quantity> reported_quantities(Design design) {
  if (design == Design::CrossSectional) return {kAllQuantities.begin(), kAllQuantities.end()};
  return {Quantity::P, Quantity::Q, Quantity::E, Quantity::Par, Quantity::Paf};
}

namespace {

TuningParams resolve_tuning(const RunConfig& config, SamplerKind kind, RngStream& rng,
                            const PosteriorContext& ctx, ChainOptions& opts) {
  TuningParams t = config.tuning;
  if (kind == SamplerKind::AdaptedJtJ || kind == SamplerKind::AdaptedFisher) {
    const TuningParams table = kind == SamplerKind::AdaptedJtJ
                                   ? table_tuning_jtj(config.data_scale)
                                   : table_tuning_fisher(config.data_scale);
    if (!config.tuning_c_set) t.c = table.c;
    if (!config.tuning_tau_set) t.tau = table.tau;
  } else if (kind == SamplerKind::Hmc && !(config.tuning_epsilon_set && config.tuning_steps_set)) {
    const HmcTuningResult tuned = tune_hmc(rng, ctx);
    opts.initial = tuned.state;
    if (!config.tuning_epsilon_set) t.epsilon = tuned.epsilon;
    if (!config.tuning_steps_set) {
      t.leapfrog_steps = std::min(tuned.leapfrog_steps, HmcTuningOptions{}.max_leapfrog_steps);
    }
  }
  return t;
}

ChainResult run_one_chain(const RunConfig& config, int index) {
  RngStream rng = RngStream::substream(config.seed, static_cast<std::uint64_t>(index));
  const ContingencyTable table = config.scaled_table();
  const std::int64_t kept = config.iterations - config.burn_in;
  ChainResult chain;
  if (config.design == Design::CaseControl) {
    chain = config.sampler == "closed_form"
                ? casecontrol_closed_form(rng, table, config.design_priors, kept)
                : casecontrol_constrained_gibbs(rng, table, config.design_priors, kept,
                                                config.burn_in, config.stall_cap);
  } else if (config.design == Design::Cohort) {
    chain = config.sampler == "closed_form"
                ? cohort_closed_form(rng, table, config.design_priors, kept)
                : cohort_constrained_gibbs(rng, table, config.design_priors, kept, config.burn_in,
                                           config.stall_cap);
  } else {
    const auto kind = sampler_from_string(config.sampler);
    if (!kind) throw ValidationError("unknown sampler " + config.sampler);
    const PosteriorContext ctx{table, config.cross_priors};
    ChainOptions opts;
    opts.iterations = config.iterations;
    opts.burn_in = config.burn_in;
    const TuningParams tuning = resolve_tuning(config, *kind, rng, ctx, opts);
    chain = run_sampler(*kind, rng, ctx, tuning, opts);
  }
  chain.meta.seed = config.seed;
  chain.meta.chain_index = index;
  return chain;
}

double weighted_sd_of(const std::vector<double>& v, const std::vector<double>& w) {
  double sw = 0.0;
  double m = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sw += w[i];
    m += w[i] * v[i];
  }
  m /= sw;
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * (v[i] - m) * (v[i] - m);
  return std::sqrt(s / sw);
}

}  // namespace

std::vector<ChainResult> run_chains(const RunConfig& config, int threads) {
  validate(config);
  std::vector<ChainResult> chains(static_cast<std::size_t>(config.chains));
  detail::parallel_for(chains.size(), threads, [&](std::size_t k) {
    chains[k] = run_one_chain(config, static_cast<int>(k));
  });
  return chains;
}

std::vector<SummaryRow> summarize_run(const RunConfig& config,
                                      const std::vector<ChainResult>& chains) {
  std::vector<SummaryRow> rows;
  const bool block = config.cross_sectional()
                         ? is_block_sampler(*sampler_from_string(config.sampler))
                         : true;
  for (Quantity q : reported_quantities(config.design)) {
    SummaryRow row{q, summarize(chains, q), std::nullopt};
    if (config.psrf_split && chains.size() >= 2 && !chains.front().weighted()) {
      std::vector<std::vector<double>> series;
      for (const auto& c : chains) series.push_back(extract(c, q));
      try {
        row.summary.psrf = bgr_psrf(series, true);
      } catch (const Error&) {
        row.summary.psrf.reset();
      }
    }
    const auto idx = static_cast<std::size_t>(q);
    if (idx < 5 || block) {
      double rate = 0.0;
      for (const auto& c : chains) rate += c.acceptance.rate(block ? 0 : idx);
      row.acceptance_rate = rate / static_cast<double>(chains.size());
    }
    rows.push_back(row);
  }
  return rows;
}

FitOutput fit(const RunConfig& config, int threads) {
  FitOutput out;
  out.chains = run_chains(config, threads);
  out.summary = summarize_run(config, out.chains);

  const std::filesystem::path dir(config.output_path);
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "chain.csv");
    if (!f) throw Error("cannot write " + (dir / "chain.csv").string());
    write_chain_csv(f, out.chains);
  }
  {
    std::ofstream f(dir / "summary.csv");
    if (!f) throw Error("cannot write " + (dir / "summary.csv").string());
    write_summary_csv(f, out.summary);
  }
  {
    std::ofstream f(dir / "summary.txt");
    if (!f) throw Error("cannot write " + (dir / "summary.txt").string());
    write_summary_text(f, out.summary, out.chains);
  }
  return out;
}

std::vector<DensityPoint> kde_grid(const std::vector<double>& values,
                                   const std::vector<double>& weights, int grid_points) {
  if (values.empty()) throw EmptyChain();
  if (grid_points < 2) throw ValidationError("density grid needs at least 2 points");
  std::vector<double> w = weights.empty() ? std::vector<double>(values.size(), 1.0) : weights;
  if (w.size() != values.size()) throw ValidationError("weights and values differ in length");
  double total = 0.0;
  for (double x : w) total += x;
  if (!(total > 0.0)) throw AllZeroWeights();
  for (double& x : w) x /= total;

  const double n_eff = weights.empty() ? static_cast<double>(values.size()) : ess_weights(w);
  const double sd = weighted_sd_of(values, w);
  const double iqr = weighted_quantile(values, w, 0.75) - weighted_quantile(values, w, 0.25);
  double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  if (!(spread > 0.0)) spread = std::max(std::fabs(values.front()) * 1e-3, 1e-12);
  const double h = 0.9 * spread * std::pow(n_eff, -0.2);

  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it - 3.0 * h;
  const double hi = *hi_it + 3.0 * h;
  const double step = (hi - lo) / (grid_points - 1);
  const double norm = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi));

  std::vector<DensityPoint> grid(static_cast<std::size_t>(grid_points));
  for (int g = 0; g < grid_points; ++g) {
    const double x = lo + step * g;
    double dens = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double u = (x - values[i]) / h;
      dens += w[i] * std::exp(-0.5 * u * u);
    }
    grid[static_cast<std::size_t>(g)] = {x, dens * norm};
  }
  return grid;
}

void write_density_csv(std::ostream& out, const std::vector<ChainResult>& chains, int grid_points) {
  out << "quantity,x,density\n";
  for (Quantity q : {Quantity::Par, Quantity::Paf}) {
    std::vector<double> values;
    std::vector<double> weights;
    bool weighted = false;
    for (const auto& c : chains) weighted = weighted || c.weighted();
    for (const auto& c : chains) {
      const auto v = extract(c, q);
      values.insert(values.end(), v.begin(), v.end());
      if (weighted) {
        if (c.weights) {
          weights.insert(weights.end(), c.weights->begin(), c.weights->end());
        } else {
          weights.insert(weights.end(), v.size(), 1.0 / static_cast<double>(v.size()));
        }
      }
    }
    for (const auto& pt : kde_grid(values, weights, grid_points)) {
      out << to_string(q) << ',' << format_double(pt.x) << ',' << format_double(pt.density)
          << '\n';
    }
  }
}

ChainResult limiting_posterior_for(const RunConfig& config, std::int64_t n_draws) {
  if (!config.cross_sectional()) {
    throw ValidationError("limiting posterior applies to the cross_sectional design");
  }
  const ContingencyTable table = config.scaled_table();
  const auto x = table.cells();
  const double n = static_cast<double>(table.total());
  const EtaVector eta{x[0] / n, x[1] / n, x[2] / n, x[3] / n};
  RngStream rng = RngStream::substream(config.seed, 0);
  ChainResult chain =
      limiting_posterior_sample(rng, eta, PosteriorContext{table, config.cross_priors}, n_draws);
  chain.meta.seed = config.seed;
  return chain;
}

}  // namespace attrib
