// Acceptance checks. `acceptance N` runs criterion N, no argument runs all.
// Prints one "criterion N: PASS|FAIL ..." line per criterion; exit status is
// non-zero when any requested criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "attrib/config.hpp"
#include "attrib/designs.hpp"
#include "attrib/diagnostics.hpp"
#include "attrib/misclass_model.hpp"
#include "attrib/runner.hpp"
#include "attrib/samplers.hpp"
#include "test_util.hpp"

using namespace attrib;
using attrib::testing::iid_se;
using attrib::testing::mean_of;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int thread_count() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

RunConfig cross_config(const std::string& sampler, std::int64_t iterations, std::int64_t burn_in,
                       int chains, std::uint64_t seed, std::int64_t scale = 1) {
  std::ostringstream json;
  json << R"({"design": "cross_sectional", "counts": [22, 25, 82, 251], "sampler": ")" << sampler
       << R"(", "iterations": )" << iterations << R"(, "burn_in": )" << burn_in
       << R"(, "chains": )" << chains << R"(, "seed": )" << seed << R"(, "data_scale": )" << scale
       << "}";
  return parse_config(json.str());
}

RunConfig benchmark_config(std::int64_t iterations, int chains, std::uint64_t seed,
                           std::vector<std::int64_t> scales) {
  RunConfig cfg = cross_config("importance", iterations, 0, chains, seed);
  cfg.benchmark.scales = std::move(scales);
  return cfg;
}

const BenchmarkCell* find_cell(const BenchmarkReport& r, SamplerKind k, std::int64_t scale) {
  for (const auto& c : r.cells) {
    if (c.sampler == k && c.scale == scale) return &c;
  }
  return nullptr;
}

std::size_t quantity_index(Quantity q) {
  return static_cast<std::size_t>(std::find(kAllQuantities.begin(), kAllQuantities.end(), q) -
                                  kAllQuantities.begin());
}

// 1. Case-control closed form with a prior on P(D+).
Outcome criterion1() {
  Outcome o;
  const auto t0 = Clock::now();
  const RunConfig cfg = parse_config(R"({"design": "case_control", "counts": [22, 25, 82, 251],
      "prior_target": "disease", "priors": {"phi1": [1, 1], "phi2": [1, 1], "phi3": [1, 1000]},
      "iterations": 100000, "seed": 2101})");
  const auto chains = run_chains(cfg);
  const double secs = seconds_since(t0);
  const auto par_s = summarize(chains, Quantity::Par);
  const auto paf_s = summarize(chains, Quantity::Paf);
  o.detail << "PAR mean " << fmt("%.6f", par_s.mean) << " CI (" << fmt("%.6f", par_s.ci_low) << ", "
           << fmt("%.6f", par_s.ci_high) << "); PAF mean " << fmt("%.4f", paf_s.mean) << " CI ("
           << fmt("%.4f", paf_s.ci_low) << ", " << fmt("%.4f", paf_s.ci_high) << "); "
           << fmt("%.2f", secs) << " s ";
  o.check(par_s.mean >= 0.0010 && par_s.mean <= 0.0016, "PAR mean in [0.0010, 0.0016]");
  o.check(paf_s.mean >= 0.13 && paf_s.mean <= 0.15, "PAF mean in [0.13, 0.15]");
  o.check(std::fabs(paf_s.ci_low - 0.05) <= 0.015, "PAF CI low within 0.015 of 0.05");
  o.check(std::fabs(paf_s.ci_high - 0.23) <= 0.015, "PAF CI high within 0.015 of 0.23");
  o.check(secs < 5.0, "runtime < 5 s");
  return o;
}

// 2. Case-control constrained Gibbs with a prior on P(E+).
Outcome criterion2() {
  Outcome o;
  const auto t0 = Clock::now();
  const RunConfig cfg = parse_config(R"({"design": "case_control", "counts": [22, 25, 82, 251],
      "prior_target": "exposure", "priors": {"phi1": [1, 1], "phi2": [1, 1], "e": [1, 10]},
      "iterations": 51000, "burn_in": 1000, "seed": 2202})");
  const auto chains = run_chains(cfg);
  const double secs = seconds_since(t0);
  const auto par_s = summarize(chains, Quantity::Par);
  const auto paf_s = summarize(chains, Quantity::Paf);
  o.detail << "draws " << chains[0].draws.size() << "; PAR mean " << fmt("%.5f", par_s.mean)
           << " CI (" << fmt("%.5f", par_s.ci_low) << ", " << fmt("%.5f", par_s.ci_high)
           << "); PAF mean " << fmt("%.4f", paf_s.mean) << " CI (" << fmt("%.4f", paf_s.ci_low)
           << ", " << fmt("%.4f", paf_s.ci_high) << "); " << fmt("%.2f", secs) << " s ";
  o.check(chains[0].draws.size() == 50000, "50000 post-burn-in draws");
  o.check(std::fabs(par_s.mean - 0.025) <= 0.005, "PAR mean within 0.005 of 0.025");
  o.check(std::fabs(paf_s.mean - 0.096) <= 0.02, "PAF mean within 0.02 of 0.096");
  o.check(secs < 30.0, "runtime < 30 s");
  return o;
}

// 3. Every convergent cross-sectional sampler estimates the same PAR/PAF.
Outcome criterion3() {
  Outcome o;
  const auto t0 = Clock::now();
  struct Fit {
    std::string name;
    PosteriorSummary par;
    PosteriorSummary paf;
  };
  std::vector<Fit> fits;
  for (SamplerKind k : kAllSamplers) {
    const std::string name = to_string(k);
    const bool weighted = k == SamplerKind::Importance;
    const RunConfig cfg = weighted ? cross_config(name, 200000, 0, 1, 2303)
                                   : cross_config(name, 100000, 10000, 2, 2303);
    const auto chains = run_chains(cfg, thread_count());
    const auto par_s = summarize(chains, Quantity::Par);
    const auto paf_s = summarize(chains, Quantity::Paf);
    const bool converged = weighted || (par_s.psrf && *par_s.psrf < kPsrfThreshold &&
                                        paf_s.psrf && *paf_s.psrf < kPsrfThreshold);
    o.detail << name << " PAR " << fmt("%.4f", par_s.mean) << "+-" << fmt("%.4f", par_s.mc_se)
             << " PAF " << fmt("%.4f", paf_s.mean);
    if (!converged) {
      o.detail << " (not converged, excluded); ";
      continue;
    }
    o.detail << "; ";
    o.check(std::fabs(par_s.mean - 0.03) <= 0.01, name + " PAR within 0.01 of 0.03");
    o.check(std::fabs(paf_s.mean - 0.12) <= 0.02, name + " PAF within 0.02 of 0.12");
    fits.push_back({name, par_s, paf_s});
  }
  o.check(fits.size() >= 5, "at least five samplers converge");
  for (std::size_t i = 0; i < fits.size(); ++i) {
    for (std::size_t j = i + 1; j < fits.size(); ++j) {
      const double se = std::hypot(fits[i].par.mc_se, fits[j].par.mc_se);
      o.check(std::fabs(fits[i].par.mean - fits[j].par.mean) <= 3.0 * se,
              fits[i].name + " vs " + fits[j].name + " PAR within 3 MC SE");
    }
  }
  const double secs = seconds_since(t0);
  o.detail << fmt("%.1f", secs) << " s ";
  o.check(secs < 300.0, "runtime < 5 min");
  return o;
}

// 4. Importance sampler retained fraction at every scale.
Outcome criterion4() {
  Outcome o;
  for (std::int64_t scale : {1, 10, 100}) {
    const auto t0 = Clock::now();
    RngStream rng(2404);
    const PosteriorContext ctx{leptospirosis_table().scaled(scale), PriorSet{}};
    const ChainResult c = importance_sampler(rng, ctx, 100000);
    const double secs = seconds_since(t0);
    const double rate = 100.0 * c.acceptance.rate(0);
    o.detail << "n=" << 380 * scale << " " << fmt("%.2f", rate) << "% ";
    o.check(rate >= 85.5 && rate <= 89.0, "retained fraction in [85.5, 89.0] at scale " +
                                              std::to_string(scale));
    if (scale == 1) o.check(secs < 60.0, "runtime < 1 min at scale 1");
  }
  return o;
}

// 5. Importance sampler ESS per 1000 iterations at every scale.
Outcome criterion5() {
  Outcome o;
  for (std::int64_t scale : {1, 10, 100}) {
    RngStream rng(2505);
    const PosteriorContext ctx{leptospirosis_table().scaled(scale), PriorSet{}};
    const ChainResult c = importance_sampler(rng, ctx, 100000);
    const double e = ess_per_thousand(c, Quantity::Par);
    o.detail << "n=" << 380 * scale << " " << fmt("%.1f", e) << " ";
    o.check(e >= 800.0 && e <= 900.0, "ESS/1000 in [800, 900] at scale " + std::to_string(scale));
  }
  return o;
}

// 6. Importance weights against the data-augmented Gibbs sampler.
Outcome criterion6() {
  Outcome o;
  const auto is = run_chains(cross_config("importance", 400000, 0, 1, 2606));
  const auto gibbs = run_chains(cross_config("gibbs", 100000, 10000, 2, 2607), thread_count());
  for (Quantity q : {Quantity::Se, Quantity::Sp, Quantity::Par}) {
    const auto a = summarize(is, q);
    const auto b = summarize(gibbs, q);
    const double z = std::fabs(a.mean - b.mean) / std::hypot(a.mc_se, b.mc_se);
    o.detail << to_string(q) << " " << fmt("%.5f", a.mean) << " vs " << fmt("%.5f", b.mean)
             << " (" << fmt("%.2f", z) << " SE); ";
    o.check(z <= 3.0, to_string(q) + " within 3 MC SE");
  }
  return o;
}

// 7. Efficiency ordering, 3 seeds, at least 2 must hold. 100000 iterations per
// chain as in the benchmark protocol.
Outcome criterion7() {
  Outcome o;
  int holds = 0;
  for (std::uint64_t seed : {2701u, 2702u, 2703u}) {
    const RunConfig cfg = benchmark_config(100000, 2, seed, {1, 100});
    const BenchmarkReport r = benchmark(cfg, thread_count());
    bool ok = true;
    const BenchmarkCell* imp = find_cell(r, SamplerKind::Importance, 1);
    double best_mcmc = 0.0;
    for (const auto& c : r.cells) {
      if (c.scale != 1 || c.sampler == SamplerKind::Importance || c.status != CellStatus::Ok) continue;
      for (double e : c.ess_per_1000) best_mcmc = std::max(best_mcmc, e);
    }
    double imp_min = 0.0;
    if (imp == nullptr || imp->status != CellStatus::Ok) {
      ok = false;
    } else {
      imp_min = *std::min_element(imp->ess_per_1000.begin(), imp->ess_per_1000.end());
      ok = ok && imp_min > best_mcmc;
    }
    const BenchmarkCell* jtj = find_cell(r, SamplerKind::AdaptedJtJ, 100);
    const BenchmarkCell* rw = find_cell(r, SamplerKind::RandomWalk, 100);
    const std::size_t pi = quantity_index(Quantity::Par);
    double jtj_par = std::nan("");
    double rw_par = std::nan("");
    if (jtj && rw && jtj->status == CellStatus::Ok && rw->status == CellStatus::Ok) {
      jtj_par = jtj->ess_per_1000[pi];
      rw_par = rw->ess_per_1000[pi];
      ok = ok && jtj_par >= rw_par;
    } else {
      ok = false;
      if (jtj) o.detail << "jtj " << to_string(jtj->status) << " ";
      if (rw) o.detail << "rw " << to_string(rw->status) << " ";
    }
    holds += ok ? 1 : 0;
    o.detail << "seed " << seed << ": importance min " << fmt("%.1f", imp_min) << " > MCMC max "
             << fmt("%.1f", best_mcmc) << ", n=38000 PAR jtj " << fmt("%.1f", jtj_par) << " >= rw "
             << fmt("%.1f", rw_par) << (ok ? " holds" : " fails") << "; ";
  }
  o.check(holds >= 2, "ordering holds for at least 2 of 3 seeds");
  return o;
}

// 8. Ridge geometry: rank of J and limiting-posterior draws.
Outcome criterion8() {
  Outcome o;
  RngStream rng(2808);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Theta t{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jacobian_eta_theta(t));
    const auto s = svd.singularValues();
    // the fifth singular value of a 4 x 5 matrix is identically zero
    worst = std::max(worst, s[3] / s[0]);
  }
  o.detail << "max sigma4/sigma1 " << fmt("%.2e", worst) << "; ";
  o.check(worst < 1e-10, "rank(J) <= 3 at 1000 points");

  const PosteriorContext ctx{leptospirosis_table(), PriorSet{}};
  const Theta truth{0.45, 0.24, 0.13, 0.9, 0.97};
  const EtaVector target = eta_from_theta(truth);
  const ChainResult c = limiting_posterior_sample(rng, truth, ctx, 50000);
  double max_dev = 0.0;
  std::vector<double> pars;
  for (const Draw& d : c.draws) {
    const EtaVector eta = eta_from_theta({d.p, d.q, d.e, d.se, d.sp});
    for (int k = 0; k < 4; ++k) max_dev = std::max(max_dev, std::fabs(eta[k] - target[k]));
    pars.push_back(d.par);
  }
  const double var = attrib::testing::var_of(pars);
  o.detail << "LPD max |eta - eta_true| " << fmt("%.2e", max_dev) << ", PAR variance "
           << fmt("%.3e", var);
  o.check(max_dev <= 1e-12, "LPD draws on the ridge to 1e-12");
  o.check(var > 0.0, "LPD PAR variance positive");
  return o;
}

Theta with(Theta t, int k, double v) {
  auto a = t.as_array();
  a[k] = v;
  return Theta::from_array(a);
}

// 9. Numerical oracles.
Outcome criterion9() {
  Outcome o;
  const auto t0 = Clock::now();
  RngStream rng(2909);
  const PosteriorContext ctx{leptospirosis_table(), PriorSet{}};
  const double h = 1e-6;
  int grad_bad = 0;
  int jac_bad = 0;
  for (int i = 0; i < 100; ++i) {
    auto u = [&] { return 0.05 + 0.9 * rng.uniform(); };
    const Theta t{u(), u(), u(), 0.6 + 0.39 * rng.uniform(), 0.6 + 0.39 * rng.uniform()};
    const Vector5 g = grad_log_posterior(t, ctx);
    const Jacobian j = jacobian_eta_theta(t);
    const auto v = t.as_array();
    for (int k = 0; k < 5; ++k) {
      const Theta up = with(t, k, v[k] + h);
      const Theta dn = with(t, k, v[k] - h);
      const double fd = (log_posterior(up, ctx) - log_posterior(dn, ctx)) / (2 * h);
      if (std::fabs(fd - g[k]) > std::max(1e-5, 1e-4 * std::fabs(g[k]))) ++grad_bad;
      const EtaVector eu = eta_from_theta(up);
      const EtaVector ed = eta_from_theta(dn);
      for (int r = 0; r < 4; ++r) {
        if (std::fabs((eu[r] - ed[r]) / (2 * h) - j(r, k)) > 1e-6) ++jac_bad;
      }
    }
  }
  o.detail << "gradient mismatches " << grad_bad << ", Jacobian mismatches " << jac_bad << "; ";
  o.check(grad_bad == 0, "gradient finite differences");
  o.check(jac_bad == 0, "Jacobian finite differences");

  // conjugacy: closed-form phi1 mean against a 10^4-point grid
  {
    const ContingencyTable t{3, 1, 2, 4, Design::CaseControl};
    const BetaParams pr{2.0, 3.0};
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const double x = (i + 0.5) / 10000.0;
      const double w = std::exp(beta_log_density(x, pr) + t.x11 * std::log(x) +
                                (t.n1() - t.x11) * std::log1p(-x));
      num += x * w;
      den += w;
    }
    DesignPriorSpec s;
    s.priors[DesignParam::Phi1] = pr;
    s.priors[DesignParam::Phi2] = {1.0, 1.0};
    s.priors[DesignParam::Phi3] = {2.0, 5.0};
    const ChainResult c = casecontrol_closed_form(rng, t, s, 2'000'000);
    double acc = 0.0;
    for (const Draw& d : c.draws) acc += phi_from_population({d.p, d.q, d.e}).phi1;
    const double mc = acc / static_cast<double>(c.draws.size());
    o.detail << "conjugacy |diff| " << fmt("%.1e", std::fabs(mc - num / den)) << "; ";
    o.check(std::fabs(mc - num / den) <= 1e-3, "conjugacy grid oracle within 1e-3");
  }

  // truncated beta on [0, 1] against the full beta
  {
    std::vector<double> a(20000);
    std::vector<double> b(20000);
    for (auto& x : a) x = sample_truncated_beta(rng, {2.0, 20.0}, 0.0, 1.0);
    for (auto& x : b) x = sample_beta(rng, {2.0, 20.0});
    const double p = attrib::testing::ks_pvalue(a, b);
    o.detail << "KS p " << fmt("%.3f", p) << "; ";
    o.check(p > 0.01, "truncated beta KS p > 0.01");
  }

  // constrained Gibbs against brute-force rejection (cohort, phi3 ~ Beta(2, 20))
  {
    const ContingencyTable t = leptospirosis_table(Design::Cohort);
    DesignPriorSpec s;
    s.target = PriorTarget::DiseasePrevalence;
    s.priors[DesignParam::P] = {1.0, 1.0};
    s.priors[DesignParam::Q] = {1.0, 1.0};
    s.priors[DesignParam::Phi3] = {2.0, 20.0};
    const ChainResult c = cohort_constrained_gibbs(rng, t, s, 200000, 1000);
    const auto gs = summarize(c, Quantity::Par);
    const BetaParams pp{1.0 + t.x11, 1.0 + t.m1() - t.x11};
    const BetaParams pq{1.0 + t.x21, 1.0 + t.m2() - t.x21};
    std::vector<double> pars;
    while (pars.size() < 200000) {
      const double p = sample_beta(rng, pp);
      const double q = sample_beta(rng, pq);
      const double z = sample_beta(rng, {2.0, 20.0});
      if ((p - z) * (q - z) < 0.0) pars.push_back(z - q);
    }
    const double z = std::fabs(gs.mean - mean_of(pars)) / std::hypot(gs.mc_se, iid_se(pars));
    o.detail << "Gibbs vs rejection " << fmt("%.2f", z) << " SE; ";
    o.check(z <= 3.0, "constrained Gibbs within 3 MC SE of rejection oracle");
  }

  // ESS examples
  {
    const double w = ess_weights(std::vector<double>{2, 1, 1});
    o.check(std::fabs(w - 16.0 / 6.0) < 1e-12, "weights (2,1,1) give 16/6");
    o.check(ess_weights(std::vector<double>(100, 3.0)) == 100.0, "equal weights give n");
    std::vector<double> one(100, 0.0);
    one[7] = 1.0;
    o.check(ess_weights(one) == 1.0, "single weight gives 1");
    const std::size_t n = 100000;
    std::vector<double> iid(n);
    for (auto& x : iid) x = rng.normal();
    const double e_iid = ess_autocorr(iid).value;
    o.check(e_iid >= 0.9 * n && e_iid <= 1.1 * n, "iid ESS within 10% of n");
    std::vector<double> ar(n);
    double x = 0.0;
    for (auto& y : ar) {
      x = 0.9 * x + rng.normal();
      y = x;
    }
    const double e_ar = ess_autocorr(ar).value;
    o.check(std::fabs(e_ar / (n / 19.0) - 1.0) <= 0.2, "AR(1) ESS within 20% of n/19");
    std::vector<double> alt(1000);
    for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? -1.0 : 1.0;
    o.check(ess_autocorr(alt).value == 1000.0, "alternating series clamped to n");
    o.detail << "ESS iid " << fmt("%.0f", e_iid) << ", AR(1) " << fmt("%.0f", e_ar) << " (n/19 "
             << fmt("%.0f", n / 19.0) << "); ";
  }
  const double secs = seconds_since(t0);
  o.detail << fmt("%.1f", secs) << " s";
  o.check(secs < 120.0, "runtime < 2 min");
  return o;
}

// 10. Acceptance bands where exact reproduction is not expected.
Outcome criterion10() {
  Outcome o;
  const RunConfig cfg = benchmark_config(100000, 2, 3010, {1, 10, 100});
  const BenchmarkReport r = benchmark(cfg, thread_count());
  for (const auto& c : r.cells) {
    if (c.sampler == SamplerKind::Importance || c.sampler == SamplerKind::Gibbs) continue;
    if (c.sampler == SamplerKind::Hmc) {
      if (c.scale != 1) {
        o.detail << "hmc n=" << 380 * c.scale << " " << to_string(c.status) << "; ";
        continue;
      }
      o.detail << "hmc n=380 " << fmt("%.1f", 100.0 * c.acceptance[0]) << "%; ";
      o.check(c.status == CellStatus::Ok, "HMC tunable at n=380");
      o.check(c.acceptance[0] >= 0.50 && c.acceptance[0] <= 0.75, "HMC acceptance in 50-75%");
      continue;
    }
    if (c.scale == 1) continue;
    const std::string name = to_string(c.sampler) + " n=" + std::to_string(380 * c.scale);
    // only the acceptance band is asserted; convergence is reported
    o.detail << name << " " << to_string(c.status);
    const std::size_t ncomp = c.sampler == SamplerKind::RandomWalk ? 5 : 1;
    for (std::size_t k = 0; k < ncomp; ++k) {
      o.detail << " " << fmt("%.1f", 100.0 * c.acceptance[k]);
      o.check(c.acceptance[k] >= 0.15 && c.acceptance[k] <= 0.55, name + " acceptance in 15-55%");
    }
    o.detail << "; ";
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{
      criterion1, criterion2, criterion3, criterion4, criterion5,
      criterion6, criterion7, criterion8, criterion9, criterion10};
  std::vector<int> which;
  if (argc > 1) {
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  } else {
    for (int i = 1; i <= 10; ++i) which.push_back(i);
  }
  bool all_pass = true;
  for (int n : which) {
    if (n < 1 || n > 10) {
      std::fprintf(stderr, "no criterion %d\n", n);
      return 2;
    }
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(n - 1)]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    std::printf("criterion %d: %s %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.str().c_str());
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
