#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "attrib/diagnostics.hpp"
#include "attrib/errors.hpp"
#include "attrib/runner.hpp"
#include "attrib/samplers.hpp"
#include "parallel.hpp"

namespace attrib {

std::string to_string(CellStatus status) {
  switch (status) {
    case CellStatus::Ok:
      return "ok";
    case CellStatus::DidNotConverge:
      return "did not converge";
    case CellStatus::Untunable:
      return "untunable";
    case CellStatus::Failed:
      return "failed";
  }
  return "unknown";
}

namespace {

struct ChainJob {
  ChainResult chain;
  TuningParams tuning;
  bool tuned = true;
};

ChainJob run_benchmark_chain(const RunConfig& config, SamplerKind kind, std::int64_t scale,
                             int index) {
  RngStream rng = RngStream::substream(config.seed, static_cast<std::uint64_t>(index));
  const PosteriorContext ctx{config.table.scaled(scale), config.cross_priors};
  ChainJob job;
  ChainOptions opts;
  switch (kind) {
    case SamplerKind::RandomWalk:
      job.tuning = table_tuning_rw(scale);
      break;
    case SamplerKind::AdaptedJtJ:
      job.tuning = table_tuning_jtj(scale);
      break;
    case SamplerKind::AdaptedFisher:
      job.tuning = table_tuning_fisher(scale);
      break;
    case SamplerKind::Hmc: {
      const HmcTuningResult tuned = tune_hmc(rng, ctx);
      job.tuned = tuned.tuned;
      opts.initial = tuned.state;
      job.tuning.epsilon = tuned.epsilon;
      job.tuning.leapfrog_steps =
          std::min(tuned.leapfrog_steps, HmcTuningOptions{}.max_leapfrog_steps);
      break;
    }
    default:
      break;
  }
  job.tuning.hessian_form = config.tuning.hessian_form;
  opts.iterations = config.iterations;
  opts.burn_in = kind == SamplerKind::Importance ? 0 : config.iterations / 10;
  job.chain = run_sampler(kind, rng, ctx, job.tuning, opts);
  job.chain.meta.chain_index = index;
  return job;
}

BenchmarkCell run_cell(const RunConfig& config, SamplerKind kind, std::int64_t scale, int threads) {
  BenchmarkCell cell;
  cell.sampler = kind;
  cell.scale = scale;
  std::vector<ChainJob> jobs(static_cast<std::size_t>(config.chains));
  try {
    detail::parallel_for(jobs.size(), threads, [&](std::size_t k) {
      jobs[k] = run_benchmark_chain(config, kind, scale, static_cast<int>(k));
    });
  } catch (const std::exception& e) {
    cell.status = CellStatus::Failed;
    cell.note = e.what();
    return cell;
  }

  const double m = static_cast<double>(jobs.size());
  cell.tuning = jobs.front().tuning;
  std::vector<ChainResult> chains;
  for (auto& j : jobs) {
    for (std::size_t i = 0; i < 5; ++i) {
      cell.acceptance[i] += j.chain.acceptance.rate(i) / m;
    }
    cell.seconds += j.chain.elapsed_seconds;
    chains.push_back(std::move(j.chain));
  }
  try {
    for (std::size_t qi = 0; qi < kAllQuantities.size(); ++qi) {
      const Quantity q = kAllQuantities[qi];
      for (const auto& c : chains) {
        const Efficiency eff = efficiency(c, q);
        cell.ess_per_1000[qi] += ess_per_thousand(c, q) / m;
        cell.ess_per_second[qi] += eff.per_second / m;
      }
      const PosteriorSummary s = summarize(chains, q);
      cell.mean[qi] = s.mean;
      cell.psrf[qi] = s.psrf.value_or(std::nan(""));
    }
  } catch (const std::exception& e) {
    cell.status = CellStatus::Failed;
    cell.note = e.what();
    return cell;
  }

  const bool untuned = std::any_of(jobs.begin(), jobs.end(), [](const ChainJob& j) { return !j.tuned; });
  const bool diverged = std::any_of(cell.psrf.begin(), cell.psrf.end(),
                                    [](double r) { return !std::isnan(r) && r >= kPsrfThreshold; });
  if (untuned) {
    cell.status = CellStatus::Untunable;
    char buf[128];
    std::snprintf(buf, sizeof buf, "target acceptance needs more than %d leapfrog steps",
                  HmcTuningOptions{}.max_leapfrog_steps);
    cell.note = buf;
  } else if (diverged) {
    cell.status = CellStatus::DidNotConverge;
    cell.note = "PSRF >= 1.1";
  }
  return cell;
}

std::string cell_value(const BenchmarkCell& cell, double v, double factor = 1.0) {
  if (cell.status != CellStatus::Ok || std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v * factor);
  return buf;
}

void write_rows(std::ostream& out, const BenchmarkReport& report, bool params_only,
                const std::array<double, 7> BenchmarkCell::*field, double factor) {
  out << "sampler,scale,n,status";
  const std::size_t ncol = params_only ? 5 : 7;
  for (std::size_t i = 0; i < ncol; ++i) out << ',' << to_string(kAllQuantities[i]);
  out << '\n';
  for (const auto& cell : report.cells) {
    out << to_string(cell.sampler) << ',' << cell.scale << ',' << 380 * cell.scale << ','
        << to_string(cell.status);
    for (std::size_t i = 0; i < ncol; ++i) out << ',' << cell_value(cell, (cell.*field)[i], factor);
    out << '\n';
  }
}

}  // namespace

BenchmarkReport benchmark(const RunConfig& config, int threads) {
  if (!config.cross_sectional()) {
    throw ValidationError("benchmark applies to the cross_sectional design");
  }
  BenchmarkReport report;
  for (std::int64_t scale : config.benchmark.scales) {
    for (SamplerKind kind : config.benchmark.samplers) {
      report.cells.push_back(run_cell(config, kind, scale, threads));
    }
  }
  return report;
}

void write_benchmark_acceptance_csv(std::ostream& out, const BenchmarkReport& report) {
  out << "sampler,scale,n,status,p,q,e,se,sp\n";
  for (const auto& cell : report.cells) {
    out << to_string(cell.sampler) << ',' << cell.scale << ',' << 380 * cell.scale << ','
        << to_string(cell.status);
    for (double a : cell.acceptance) out << ',' << cell_value(cell, a, 100.0);
    out << '\n';
  }
}

void write_benchmark_ess_csv(std::ostream& out, const BenchmarkReport& report) {
  write_rows(out, report, false, &BenchmarkCell::ess_per_1000, 1.0);
}

void write_benchmark_efficiency_csv(std::ostream& out, const BenchmarkReport& report) {
  write_rows(out, report, false, &BenchmarkCell::ess_per_second, 1.0);
}

void write_benchmark_text(std::ostream& out, const BenchmarkReport& report) {
  auto section = [&](const char* title, auto value_of_cell, std::size_t ncol) {
    out << title << '\n';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-15s %7s", "sampler", "n");
    out << buf;
    for (std::size_t i = 0; i < ncol; ++i) {
      std::snprintf(buf, sizeof buf, " %9s", to_string(kAllQuantities[i]).c_str());
      out << buf;
    }
    out << '\n';
    for (const auto& cell : report.cells) {
      std::snprintf(buf, sizeof buf, "%-15s %7lld", to_string(cell.sampler).c_str(),
                    static_cast<long long>(380 * cell.scale));
      out << buf;
      if (cell.status != CellStatus::Ok) {
        out << "  " << to_string(cell.status);
        if (!cell.note.empty()) out << " (" << cell.note << ")";
      } else {
        for (std::size_t i = 0; i < ncol; ++i) {
          std::snprintf(buf, sizeof buf, " %9.1f", value_of_cell(cell, i));
          out << buf;
        }
      }
      out << '\n';
    }
    out << '\n';
  };
  section("Acceptance rate (%)",
          [](const BenchmarkCell& c, std::size_t i) { return 100.0 * c.acceptance[i]; }, 5);
  section("ESS per 1000 iterations",
          [](const BenchmarkCell& c, std::size_t i) { return c.ess_per_1000[i]; }, 7);
  section("ESS per second",
          [](const BenchmarkCell& c, std::size_t i) { return c.ess_per_second[i]; }, 7);
}

}  // namespace attrib
