#include <benchmark/benchmark.h>

#include "attrib/misclass_model.hpp"
#include "attrib/samplers.hpp"

namespace {

attrib::PosteriorContext context(std::int64_t scale) {
  return {attrib::leptospirosis_table(attrib::Design::CrossSectional).scaled(scale), {}};
}

const attrib::Theta kTheta{0.3, 0.08, 0.13, 0.88, 0.96};

void BM_LogPosterior(benchmark::State& state) {
  const auto ctx = context(1);
  for (auto _ : state) benchmark::DoNotOptimize(attrib::log_posterior(kTheta, ctx));
}
BENCHMARK(BM_LogPosterior);

void BM_GradLogPosterior(benchmark::State& state) {
  const auto ctx = context(1);
  for (auto _ : state) benchmark::DoNotOptimize(attrib::grad_log_posterior(kTheta, ctx));
}
BENCHMARK(BM_GradLogPosterior);

void BM_FisherCovariance(benchmark::State& state) {
  const auto ctx = context(1);
  const auto tuning = attrib::table_tuning_fisher(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(attrib::proposal_covariance_fisher(kTheta, ctx, tuning));
  }
}
BENCHMARK(BM_FisherCovariance);

// Cost of 1000 iterations of each sampler at the given data scale.
void BM_Sampler(benchmark::State& state) {
  const auto kind = static_cast<attrib::SamplerKind>(state.range(0));
  const auto ctx = context(state.range(1));
  attrib::TuningParams tuning;
  if (kind == attrib::SamplerKind::AdaptedJtJ) tuning = attrib::table_tuning_jtj(state.range(1));
  if (kind == attrib::SamplerKind::AdaptedFisher) tuning = attrib::table_tuning_fisher(state.range(1));
  tuning.rw_scales = {0.1, 0.02, 0.02, 0.04, 0.02};
  tuning.epsilon = 0.005;
  tuning.leapfrog_steps = 20;
  attrib::ChainOptions opts;
  opts.iterations = 1000;
  opts.burn_in = 0;
  opts.initial = kTheta;
  attrib::RngStream rng(7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(attrib::run_sampler(kind, rng, ctx, tuning, opts));
  }
  state.SetLabel(attrib::to_string(kind));
}
BENCHMARK(BM_Sampler)
    ->ArgsProduct({{0, 1, 2, 3, 4, 5}, {1, 100}})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
