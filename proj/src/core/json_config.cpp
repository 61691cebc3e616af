#include "core/json_config.hpp"

namespace cfm {

using nlohmann::json;

namespace {

[[noreturn]] void bad_field(const std::string& key, const char* expected) {
  fail(ErrorKind::Parse, "config field '" + key + "' must be " + expected);
}

double get_num(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) bad_field(key, "a number");
  return j.at(key).get<double>();
}

int64_t get_int(const json& j, const std::string& key, int64_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) bad_field(key, "an integer");
  return j.at(key).get<int64_t>();
}

uint64_t get_uint(const json& j, const std::string& key, uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && v.get<int64_t>() < 0 && !v.is_number_unsigned()))
    bad_field(key, "a non-negative integer");
  return v.get<uint64_t>();
}

std::vector<double> get_vec(const json& j, const std::string& key) {
  if (!j.at(key).is_array()) bad_field(key, "an array of numbers");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) bad_field(key, "an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

json parse_json_text(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(ErrorKind::Parse, what + ": malformed JSON");
  return j;
}

json spline_to_json(const SplineConfig& cfg) {
  return json{{"degree", cfg.degree},
              {"knots", cfg.knots},
              {"domain", {cfg.domain_lo, cfg.domain_hi}},
              {"clamp", cfg.clamp}};
}

SplineConfig spline_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::Parse, "basis config must be an object");
  double lo = 0.0, hi = 1.0;
  if (j.contains("domain")) {
    const auto d = get_vec(j, "domain");
    if (d.size() != 2) bad_field("domain", "an array [lo, hi]");
    lo = d[0];
    hi = d[1];
  }
  const int degree = static_cast<int>(get_int(j, "degree", 3));

  SplineConfig cfg;
  if (j.contains("knots") && j.at("knots").is_array()) {
    cfg.degree = degree;
    cfg.domain_lo = lo;
    cfg.domain_hi = hi;
    cfg.knots = get_vec(j, "knots");
    check_spline_config(cfg);
  } else {
    // knot count, equally spaced
    const int64_t count = j.contains("knots") ? get_int(j, "knots", 10) : get_int(j, "n_knots", 10);
    if (count < 0) bad_field("knots", "a non-negative count or an array");
    cfg = make_spline_config(degree, static_cast<size_t>(count), lo, hi);
  }
  if (j.contains("clamp")) {
    if (!j.at("clamp").is_boolean()) bad_field("clamp", "a boolean");
    cfg.clamp = j.at("clamp").get<bool>();
  }
  return cfg;
}

json hyper_to_json(const Hyperparams& h) {
  return json{{"a0", h.a0},           {"b0", h.b0},
              {"nu_tau", h.nu_tau},   {"eta_tau", h.eta_tau},
              {"nu_gamma", h.nu_gamma}, {"eta_gamma", h.eta_gamma},
              {"nu_sigma", h.nu_sigma}, {"eta_sigma", h.eta_sigma}};
}

Hyperparams hyper_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::Parse, "hyper config must be an object");
  Hyperparams h;
  h.a0 = get_num(j, "a0", h.a0);
  h.b0 = get_num(j, "b0", h.b0);
  h.nu_tau = get_num(j, "nu_tau", h.nu_tau);
  h.eta_tau = get_num(j, "eta_tau", h.eta_tau);
  h.nu_gamma = get_num(j, "nu_gamma", h.nu_gamma);
  h.eta_gamma = get_num(j, "eta_gamma", h.eta_gamma);
  h.nu_sigma = get_num(j, "nu_sigma", h.nu_sigma);
  h.eta_sigma = get_num(j, "eta_sigma", h.eta_sigma);
  if (!h.valid()) fail(ErrorKind::InvalidArgument, "hyperparameters must be positive");
  return h;
}

json chain_to_json(const ChainConfig& c) {
  return json{{"burnin", c.burnin},
              {"samples", c.samples},
              {"thin", c.thin},
              {"seed", c.seed},
              {"threads", c.threads}};
}

ChainConfig chain_from_json(const json& j, ChainConfig base) {
  if (!j.is_object()) fail(ErrorKind::Parse, "chain config must be an object");
  ChainConfig c = base;
  c.burnin = get_int(j, "burnin", c.burnin);
  c.samples = get_int(j, "samples", c.samples);
  c.thin = get_int(j, "thin", c.thin);
  if (c.burnin < 0) bad_field("burnin", "a non-negative integer");
  if (c.samples < 1) bad_field("samples", "a positive integer");
  if (c.thin < 1) bad_field("thin", "a positive integer");
  c.seed = get_uint(j, "seed", c.seed);
  const int64_t threads = get_int(j, "threads", c.threads);
  if (threads < 1) bad_field("threads", "a positive integer");
  c.threads = static_cast<int>(threads);
  return c;
}

json grid_to_json(const TimeGrid& g) { return json{{"points", g.points}}; }

TimeGrid grid_from_json(const json& j) {
  TimeGrid g;
  g.points = get_vec(j, "points");
  if (g.points.size() < 2 || !g.strictly_increasing())
    fail(ErrorKind::Validation, "grid points must be strictly increasing, at least two");
  return g;
}

namespace {

std::optional<std::vector<double>> fixed_vector(const json& j, const std::string& key, size_t big) {
  if (!j.contains(key)) return std::nullopt;
  const auto& v = j.at(key);
  if (v.is_number()) return std::vector<double>(big, v.get<double>());  // broadcast
  if (v.is_array()) {
    auto out = get_vec(j, key);
    if (out.size() != big)
      fail(ErrorKind::Parse, "fixed '" + key + "' needs one entry per basis function (" +
                                 std::to_string(big) + ")");
    return out;
  }
  bad_field(key, "a number or an array");
}

}  // namespace

json simulate_to_json(const SimulateSpec& spec) {
  json j{{"subjects", spec.subjects}, {"channels", spec.channels}, {"times", spec.times},
         {"basis", spline_to_json(spec.basis)}, {"hyper", hyper_to_json(spec.hyper)},
         {"seed", spec.seed}};
  json fixed = json::object();
  if (spec.fixed.beta) fixed["beta"] = *spec.fixed.beta;
  if (spec.fixed.tau2) fixed["tau2"] = *spec.fixed.tau2;
  if (spec.fixed.gamma2) fixed["gamma2"] = *spec.fixed.gamma2;
  if (spec.fixed.sigma2) fixed["sigma2"] = *spec.fixed.sigma2;
  if (!fixed.empty()) j["fixed"] = fixed;
  return j;
}

SimulateSpec simulate_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::Parse, "simulate config must be an object");
  SimulateSpec spec;
  spec.subjects = static_cast<size_t>(get_int(j, "subjects", 10));
  spec.channels = static_cast<size_t>(get_int(j, "channels", 5));
  spec.times = static_cast<size_t>(get_int(j, "times", 100));
  if (spec.subjects == 0 || spec.channels == 0 || spec.times < 2)
    fail(ErrorKind::InvalidArgument, "simulate needs subjects, channels >= 1 and times >= 2");
  spec.basis = j.contains("basis") ? spline_from_json(j.at("basis")) : make_spline_config(3, 10);
  spec.hyper = j.contains("hyper") ? hyper_from_json(j.at("hyper")) : Hyperparams{};
  spec.seed = get_uint(j, "seed", 1);
  if (j.contains("fixed")) {
    const auto& f = j.at("fixed");
    if (!f.is_object()) bad_field("fixed", "an object");
    const size_t big = spec.basis.size();
    spec.fixed.beta = fixed_vector(f, "beta", big);
    spec.fixed.tau2 = fixed_vector(f, "tau2", big);
    spec.fixed.gamma2 = fixed_vector(f, "gamma2", big);
    if (f.contains("sigma2")) {
      if (!f.at("sigma2").is_number()) bad_field("sigma2", "a number");
      spec.fixed.sigma2 = f.at("sigma2").get<double>();
    }
  }
  return spec;
}

json fit_to_json(const FitSpec& spec) {
  return json{{"basis", spline_to_json(spec.basis)},
              {"hyper", hyper_to_json(spec.hyper)},
              {"chain", chain_to_json(spec.chain)}};
}

FitSpec fit_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::Parse, "fit config must be an object");
  FitSpec spec;
  spec.basis = j.contains("basis") ? spline_from_json(j.at("basis")) : make_spline_config(3, 10);
  spec.hyper = j.contains("hyper") ? hyper_from_json(j.at("hyper")) : Hyperparams{};
  spec.chain = j.contains("chain") ? chain_from_json(j.at("chain")) : ChainConfig{};
  return spec;
}

}  // namespace cfm
