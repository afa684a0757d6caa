// Command-line front end: fit, benchmark, density, lpd.
#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "attrib/chain_io.hpp"
#include "attrib/config.hpp"
#include "attrib/errors.hpp"
#include "attrib/runner.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitSampler = 3;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int threads = 1;
  std::optional<std::string> data_path;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw attrib::ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

attrib::RunConfig load_config(const CommonFlags& flags) {
  attrib::RunConfig cfg = attrib::parse_config(read_file(flags.config_path));
  attrib::apply_environment(cfg);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.out) cfg.output_path = *flags.out;
  if (flags.data_path) {
    std::ifstream in(*flags.data_path);
    if (!in) throw attrib::ValidationError("cannot open " + *flags.data_path);
    const auto x = attrib::read_counts_csv(in);
    cfg.table = {x[0], x[1], x[2], x[3], cfg.design};
  }
  attrib::validate(cfg);
  return cfg;
}

std::ofstream open_output(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream out(path);
  if (!out) throw attrib::Error("cannot write " + path.string());
  return out;
}

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON run config")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", flags.seed, "Override the config seed");
  cmd->add_option("--out", flags.out, "Output directory");
  cmd->add_option("--threads", flags.threads, "Concurrent chains")->check(CLI::PositiveNumber);
  cmd->add_option("--data", flags.data_path, "CSV with header x11,x12,x21,x22");
}

int run_fit(const CommonFlags& flags) {
  const auto cfg = load_config(flags);
  const auto out = attrib::fit(cfg, flags.threads);
  attrib::write_summary_text(std::cout, out.summary, out.chains);
  return 0;
}

int run_benchmark(const CommonFlags& flags) {
  const auto cfg = load_config(flags);
  const auto report = attrib::benchmark(cfg, flags.threads);
  {
    auto f = open_output(cfg.output_path, "benchmark_acceptance.csv");
    attrib::write_benchmark_acceptance_csv(f, report);
  }
  {
    auto f = open_output(cfg.output_path, "benchmark_ess.csv");
    attrib::write_benchmark_ess_csv(f, report);
  }
  {
    auto f = open_output(cfg.output_path, "benchmark_efficiency.csv");
    attrib::write_benchmark_efficiency_csv(f, report);
  }
  {
    auto f = open_output(cfg.output_path, "benchmark.txt");
    attrib::write_benchmark_text(f, report);
  }
  attrib::write_benchmark_text(std::cout, report);
  return 0;
}

int run_density(const CommonFlags& flags, const std::optional<std::string>& chain_path,
                int grid_points) {
  const auto cfg = load_config(flags);
  std::vector<attrib::ChainResult> chains;
  if (chain_path) {
    std::ifstream in(*chain_path);
    if (!in) throw attrib::ValidationError("cannot open " + *chain_path);
    chains = attrib::read_chain_csv(in);
  } else {
    chains = attrib::run_chains(cfg, flags.threads);
  }
  auto f = open_output(cfg.output_path, "density.csv");
  attrib::write_density_csv(f, chains, grid_points);
  return 0;
}

int run_lpd(const CommonFlags& flags, std::int64_t draws) {
  const auto cfg = load_config(flags);
  const std::vector<attrib::ChainResult> chains{attrib::limiting_posterior_for(cfg, draws)};
  {
    auto f = open_output(cfg.output_path, "lpd_chain.csv");
    attrib::write_chain_csv(f, chains);
  }
  std::vector<attrib::SummaryRow> rows;
  for (auto q : attrib::kAllQuantities) rows.push_back({q, attrib::summarize(chains, q), std::nullopt});
  {
    auto f = open_output(cfg.output_path, "lpd_summary.csv");
    attrib::write_summary_csv(f, rows);
  }
  attrib::write_summary_text(std::cout, rows, chains);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian attributable risk estimation"};
  app.require_subcommand(1);

  CommonFlags fit_flags;
  auto* fit_cmd = app.add_subcommand("fit", "Sample the posterior and write chain and summary files");
  add_common(fit_cmd, fit_flags);

  CommonFlags bench_flags;
  auto* bench_cmd = app.add_subcommand("benchmark", "Compare samplers across data scales");
  add_common(bench_cmd, bench_flags);

  CommonFlags dens_flags;
  std::optional<std::string> chain_path;
  int grid_points = 512;
  auto* dens_cmd = app.add_subcommand("density", "Kernel density grids for PAR and PAF");
  add_common(dens_cmd, dens_flags);
  dens_cmd->add_option("--chain", chain_path, "Use an existing chain CSV instead of sampling");
  dens_cmd->add_option("--grid", grid_points, "Grid points")->check(CLI::Range(2, 1'000'000));

  CommonFlags lpd_flags;
  std::int64_t lpd_draws = 100'000;
  auto* lpd_cmd = app.add_subcommand("lpd", "Limiting-posterior reference draws");
  add_common(lpd_cmd, lpd_flags);
  lpd_cmd->add_option("--draws", lpd_draws, "Retained draws")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fit_flags);
    if (bench_cmd->parsed()) return run_benchmark(bench_flags);
    if (dens_cmd->parsed()) return run_density(dens_flags, chain_path, grid_points);
    if (lpd_cmd->parsed()) return run_lpd(lpd_flags, lpd_draws);
  } catch (const attrib::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const attrib::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSampler;
  }
  return 0;
}
