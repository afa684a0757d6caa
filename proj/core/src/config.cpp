#include "attrib/config.hpp"

#include <cstdlib>
#include <nlohmann/json.hpp>
#include <set>

#include "attrib/errors.hpp"

namespace attrib {

namespace {

using json = nlohmann::json;

std::string line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ParseError("unknown key '" + where + key + "'");
  }
}

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ParseError("key '" + key + "' has the wrong type");
  }
}

std::int64_t get_int(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw ParseError("key '" + key + "' must be an integer");
  return j.get<std::int64_t>();
}

double get_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ParseError("key '" + key + "' must be a number");
  return j.get<double>();
}

BetaParams parse_beta(const json& j, const std::string& key) {
  double a = 0.0;
  double b = 0.0;
  if (j.is_array()) {
    if (j.size() != 2) throw ParseError("prior '" + key + "' must be [alpha, beta]");
    a = get_number(j[0], key);
    b = get_number(j[1], key);
  } else if (j.is_object()) {
    reject_unknown(j, {"alpha", "beta"}, "priors." + key + ".");
    if (!j.contains("alpha") || !j.contains("beta")) {
      throw ParseError("prior '" + key + "' needs alpha and beta");
    }
    a = get_number(j["alpha"], key + ".alpha");
    b = get_number(j["beta"], key + ".beta");
  } else {
    throw ParseError("prior '" + key + "' must be [alpha, beta] or {alpha, beta}");
  }
  try {
    return BetaParams(a, b);
  } catch (const ValidationError&) {
    throw ValidationError("prior '" + key + "' needs alpha > 0 and beta > 0");
  }
}

Design parse_design(const std::string& s) {
  if (s == "case_control") return Design::CaseControl;
  if (s == "cohort") return Design::Cohort;
  if (s == "cross_sectional") return Design::CrossSectional;
  throw ValidationError("design must be case_control, cohort or cross_sectional");
}

PriorTarget parse_target(const std::string& s) {
  if (s == "disease") return PriorTarget::DiseasePrevalence;
  if (s == "exposure") return PriorTarget::ExposureRate;
  throw ValidationError("prior_target must be disease or exposure");
}

ContingencyTable parse_counts(const json& j) {
  std::array<std::int64_t, 4> x{};
  if (j.is_array()) {
    if (j.size() != 4) throw ParseError("counts must be [x11, x12, x21, x22]");
    for (std::size_t i = 0; i < 4; ++i) x[i] = get_int(j[i], "counts");
  } else if (j.is_object()) {
    reject_unknown(j, {"x11", "x12", "x21", "x22"}, "counts.");
    const char* names[] = {"x11", "x12", "x21", "x22"};
    for (std::size_t i = 0; i < 4; ++i) {
      if (!j.contains(names[i])) throw ParseError(std::string("counts missing ") + names[i]);
      x[i] = get_int(j[names[i]], std::string("counts.") + names[i]);
    }
  } else {
    throw ParseError("counts must be an array or an object");
  }
  return {x[0], x[1], x[2], x[3], Design::CrossSectional};
}

// Closed form is available when the informative prior sits on the quantity the
// design does not fix: P(D+) for case-control, P(E+) for cohort.
bool closed_form_target(Design design, PriorTarget target) {
  return (design == Design::CaseControl && target == PriorTarget::DiseasePrevalence) ||
         (design == Design::Cohort && target == PriorTarget::ExposureRate);
}

std::vector<DesignParam> design_params(Design design, PriorTarget target) {
  const DesignParam informative =
      target == PriorTarget::DiseasePrevalence ? DesignParam::Phi3 : DesignParam::E;
  if (design == Design::CaseControl) return {DesignParam::Phi1, DesignParam::Phi2, informative};
  return {DesignParam::P, DesignParam::Q, informative};
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    throw ParseError("malformed config at " + line_col(text, byte));
  }
  if (!doc.is_object()) throw ParseError("config must be a JSON object");
  reject_unknown(doc,
                 {"design", "prior_target", "counts", "priors", "sampler", "iterations", "burn_in",
                  "chains", "seed", "tuning", "output_path", "data_scale", "stall_cap", "bgr",
                  "psrf_split", "benchmark"},
                 "");

  RunConfig cfg;
  if (!doc.contains("design")) throw ValidationError("design is required");
  cfg.design = parse_design(get_as<std::string>(doc["design"], "design"));
  if (!doc.contains("counts")) throw ValidationError("counts are required");
  cfg.table = parse_counts(doc["counts"]);
  cfg.table.design = cfg.design;

  if (doc.contains("prior_target")) {
    cfg.prior_target = parse_target(get_as<std::string>(doc["prior_target"], "prior_target"));
  }
  if (doc.contains("sampler")) cfg.sampler = get_as<std::string>(doc["sampler"], "sampler");

  const json priors = doc.contains("priors") ? doc["priors"] : json::object();
  if (!priors.is_object()) throw ParseError("priors must be an object");

  if (cfg.cross_sectional()) {
    if (cfg.prior_target) throw ValidationError("prior_target applies only to case_control/cohort");
    if (cfg.sampler.empty()) cfg.sampler = "importance";
    reject_unknown(priors, {"p", "q", "e", "se", "sp"}, "priors.");
    if (priors.contains("p")) cfg.cross_priors.p = parse_beta(priors["p"], "p");
    if (priors.contains("q")) cfg.cross_priors.q = parse_beta(priors["q"], "q");
    if (priors.contains("e")) cfg.cross_priors.e = parse_beta(priors["e"], "e");
    if (priors.contains("se")) cfg.cross_priors.se = parse_beta(priors["se"], "se");
    if (priors.contains("sp")) cfg.cross_priors.sp = parse_beta(priors["sp"], "sp");
  } else {
    if (!cfg.prior_target) {
      if (cfg.sampler == "closed_form" || cfg.sampler == "constrained_gibbs") {
        const bool closed = cfg.sampler == "closed_form";
        const bool cc = cfg.design == Design::CaseControl;
        cfg.prior_target = (closed == cc) ? PriorTarget::DiseasePrevalence
                                          : PriorTarget::ExposureRate;
      } else {
        throw ValidationError("prior_target (disease or exposure) is required for this design");
      }
    }
    if (cfg.sampler.empty()) {
      cfg.sampler = closed_form_target(cfg.design, *cfg.prior_target) ? "closed_form"
                                                                       : "constrained_gibbs";
    }
    cfg.design_priors.target = *cfg.prior_target;
    const auto params = design_params(cfg.design, *cfg.prior_target);
    std::set<std::string> allowed;
    for (auto p : params) allowed.insert(to_string(p));
    reject_unknown(priors, allowed, "priors.");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const std::string name = to_string(params[i]);
      if (priors.contains(name)) {
        cfg.design_priors.priors[params[i]] = parse_beta(priors[name], name);
      } else if (i < 2) {
        cfg.design_priors.priors[params[i]] = BetaParams{1.0, 1.0};
      } else {
        throw ValidationError("informative prior '" + name + "' must be given explicitly");
      }
    }
  }

  if (doc.contains("iterations")) cfg.iterations = get_int(doc["iterations"], "iterations");
  if (doc.contains("burn_in")) {
    cfg.burn_in = get_int(doc["burn_in"], "burn_in");
  } else if (cfg.sampler != "closed_form" && cfg.sampler != "importance") {
    cfg.burn_in = cfg.iterations / 10;
  }
  if (doc.contains("chains")) cfg.chains = static_cast<int>(get_int(doc["chains"], "chains"));
  if (doc.contains("seed")) {
    const auto& s = doc["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
      throw ParseError("key 'seed' must be a non-negative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("output_path")) {
    cfg.output_path = get_as<std::string>(doc["output_path"], "output_path");
  }
  if (doc.contains("data_scale")) cfg.data_scale = get_int(doc["data_scale"], "data_scale");
  if (doc.contains("stall_cap")) cfg.stall_cap = get_int(doc["stall_cap"], "stall_cap");
  if (doc.contains("bgr")) cfg.compute_bgr = get_as<bool>(doc["bgr"], "bgr");
  if (doc.contains("psrf_split")) cfg.psrf_split = get_as<bool>(doc["psrf_split"], "psrf_split");

  if (doc.contains("tuning")) {
    const json& t = doc["tuning"];
    if (!t.is_object()) throw ParseError("tuning must be an object");
    reject_unknown(t, {"c", "tau", "epsilon", "leapfrog_steps", "rw_scales", "hessian_form"},
                   "tuning.");
    if (t.contains("c")) {
      cfg.tuning.c = get_number(t["c"], "tuning.c");
      cfg.tuning_c_set = true;
    }
    if (t.contains("tau")) {
      cfg.tuning.tau = get_number(t["tau"], "tuning.tau");
      cfg.tuning_tau_set = true;
    }
    if (t.contains("epsilon")) {
      cfg.tuning.epsilon = get_number(t["epsilon"], "tuning.epsilon");
      cfg.tuning_epsilon_set = true;
    }
    if (t.contains("leapfrog_steps")) {
      cfg.tuning.leapfrog_steps =
          static_cast<int>(get_int(t["leapfrog_steps"], "tuning.leapfrog_steps"));
      cfg.tuning_steps_set = true;
    }
    if (t.contains("rw_scales")) {
      const json& s = t["rw_scales"];
      if (!s.is_array() || s.size() != 5) throw ParseError("tuning.rw_scales must have 5 numbers");
      for (std::size_t i = 0; i < 5; ++i) cfg.tuning.rw_scales[i] = get_number(s[i], "tuning.rw_scales");
    }
    if (t.contains("hessian_form")) {
      const auto form = get_as<std::string>(t["hessian_form"], "tuning.hessian_form");
      if (form == "as_published") {
        cfg.tuning.hessian_form = HessianForm::AsPublished;
      } else if (form == "standard") {
        cfg.tuning.hessian_form = HessianForm::Standard;
      } else {
        throw ValidationError("tuning.hessian_form must be as_published or standard");
      }
    }
  }

  if (doc.contains("benchmark")) {
    const json& b = doc["benchmark"];
    if (!b.is_object()) throw ParseError("benchmark must be an object");
    reject_unknown(b, {"samplers", "scales"}, "benchmark.");
    if (b.contains("samplers")) {
      if (!b["samplers"].is_array()) throw ParseError("benchmark.samplers must be an array");
      cfg.benchmark.samplers.clear();
      for (const auto& s : b["samplers"]) {
        const auto kind = sampler_from_string(get_as<std::string>(s, "benchmark.samplers"));
        if (!kind) throw ValidationError("unknown benchmark sampler " + s.dump());
        cfg.benchmark.samplers.push_back(*kind);
      }
    }
    if (b.contains("scales")) {
      if (!b["scales"].is_array()) throw ParseError("benchmark.scales must be an array");
      cfg.benchmark.scales.clear();
      for (const auto& s : b["scales"]) cfg.benchmark.scales.push_back(get_int(s, "benchmark.scales"));
    }
  }

  validate(cfg);
  return cfg;
}

void validate(const RunConfig& config) {
  config.table.validate();
  if (config.iterations < 1) throw ValidationError("iterations must be positive");
  if (config.burn_in < 0 || config.burn_in >= config.iterations) {
    throw ValidationError("burn_in must satisfy 0 <= burn_in < iterations");
  }
  if (config.chains < 1) throw ValidationError("chains must be >= 1");
  if (config.compute_bgr && config.chains < 2) {
    throw ValidationError("bgr needs chains >= 2");
  }
  if (config.data_scale < 1) throw ValidationError("data_scale must be >= 1");
  if (config.stall_cap < 1) throw ValidationError("stall_cap must be >= 1");

  if (config.cross_sectional()) {
    if (!sampler_from_string(config.sampler)) {
      throw ValidationError("sampler '" + config.sampler + "' is not valid for cross_sectional");
    }
    if (config.sampler == "gibbs" && !config.cross_priors.flat_cell_prior()) {
      throw ValidationError("sampler gibbs needs p, q ~ Beta(1,1) and e ~ Beta(2,2)");
    }
    if ((config.sampler == "importance") && config.burn_in != 0) {
      throw ValidationError("importance sampling has no burn-in");
    }
    config.tuning.validate();
  } else {
    if (config.sampler != "closed_form" && config.sampler != "constrained_gibbs") {
      throw ValidationError("sampler '" + config.sampler + "' is not valid for " +
                            to_string(config.design));
    }
    if (!config.prior_target) throw ValidationError("prior_target is required");
    const bool closed = closed_form_target(config.design, *config.prior_target);
    if (closed != (config.sampler == "closed_form")) {
      throw ValidationError("sampler '" + config.sampler + "' does not match prior_target for " +
                            to_string(config.design));
    }
    if (closed && config.burn_in != 0) {
      throw ValidationError("closed-form sampling has no burn-in");
    }
    for (auto p : design_params(config.design, *config.prior_target)) config.design_priors.at(p);
  }
  for (auto s : config.benchmark.scales) {
    if (s < 1) throw ValidationError("benchmark scales must be >= 1");
  }
}

void apply_environment(RunConfig& config) {
  const char* env = std::getenv("ATTRIB_BAYES_SEED");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0' || env[0] == '-') {
    throw ValidationError("ATTRIB_BAYES_SEED must be a non-negative integer");
  }
  config.seed = static_cast<std::uint64_t>(v);
}

}  // namespace attrib
