#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "attrib/chain_io.hpp"
#include "attrib/config.hpp"
#include "attrib/core.hpp"

namespace attrib {

/// Quantities reported for a design (Se/Sp only with a diagnostic test).
std::vector<Quantity> reported_quantities(Design design);

/// Runs every configured chain, at most `threads` at a time. Chain k uses
/// RngStream::substream(config.seed, k).
std::vector<ChainResult> run_chains(const RunConfig& config, int threads = 1);

std::vector<SummaryRow> summarize_run(const RunConfig& config,
                                      const std::vector<ChainResult>& chains);

struct FitOutput {
  std::vector<ChainResult> chains;
  std::vector<SummaryRow> summary;
};

/// Runs the config and writes chain.csv, summary.csv and summary.txt into
/// config.output_path.
FitOutput fit(const RunConfig& config, int threads = 1);

struct DensityPoint {
  double x = 0.0;
  double density = 0.0;
};

/// Gaussian kernel density estimate on an evenly spaced grid. Bandwidth is
/// Silverman's rule, 0.9 min(sd, IQR/1.34) n^(-1/5), with n the effective
/// sample size for weighted samples.
std::vector<DensityPoint> kde_grid(const std::vector<double>& values,
                                   const std::vector<double>& weights, int grid_points = 512);

/// Writes `quantity,x,density` rows for PAR and PAF.
void write_density_csv(std::ostream& out, const std::vector<ChainResult>& chains,
                       int grid_points = 512);

/// Limiting-posterior draws at eta = observed proportions of the scaled table.
ChainResult limiting_posterior_for(const RunConfig& config, std::int64_t n_draws);

enum class CellStatus { Ok, DidNotConverge, Untunable, Failed };

std::string to_string(CellStatus status);

struct BenchmarkCell {
  SamplerKind sampler;
  std::int64_t scale = 1;
  CellStatus status = CellStatus::Ok;
  std::string note;
  /// Post-burn-in acceptance per parameter, averaged over chains.
  std::array<double, 5> acceptance{};
  /// Indexed like kAllQuantities.
  std::array<double, 7> ess_per_1000{};
  std::array<double, 7> ess_per_second{};
  std::array<double, 7> psrf{};
  std::array<double, 7> mean{};
  double seconds = 0.0;
  TuningParams tuning;
};

struct BenchmarkReport {
  std::vector<BenchmarkCell> cells;
};

/// Runs each (sampler, scale) pair of config.benchmark with config.chains
/// chains of config.iterations iterations. Failures are recorded in the cell
/// status, never thrown.
BenchmarkReport benchmark(const RunConfig& config, int threads = 1);

/// Acceptance rates, ESS per 1000 iterations and ESS per second, one table each.
void write_benchmark_acceptance_csv(std::ostream& out, const BenchmarkReport& report);
void write_benchmark_ess_csv(std::ostream& out, const BenchmarkReport& report);
void write_benchmark_efficiency_csv(std::ostream& out, const BenchmarkReport& report);
void write_benchmark_text(std::ostream& out, const BenchmarkReport& report);

}  // namespace attrib
