#include "emucal/config.hpp"

#include <json.hpp>

#include "emucal/csv.hpp"
#include "emucal/errors.hpp"

namespace emucal {

namespace {

using nlohmann::json;

ParameterSpec invariant(std::string name, ParamKind kind, Transform t, double def, double lo, double hi) {
  return {std::move(name), kind, t, def, {lo, hi}, std::nullopt};
}

std::vector<ParameterSpec> reference_invariant() {
  using enum ParamKind;
  using enum Transform;
  return {
      invariant("MBL", Const, Logit, 40, 40, 100),   invariant("FTT", Const, Log, 0.25, 0.06, 0.82),
      invariant("UMM", Const, Log, 0.8, 0.16, 0.85), invariant("BLHS", Scale, Logit, 1, 0.8, 1.8),
      invariant("BLHU", Scale, Logit, 1, 0.8, 1.8),  invariant("BLVS", Scale, Logit, 1, 0.7, 1.3),
      invariant("BLVU", Scale, Logit, 1, 0.7, 1.3),  invariant("LHS", Scale, Logit, 1, 0.8, 1.8),
      invariant("LHU", Scale, Logit, 1, 0.8, 1.8),   invariant("LVS", Scale, Logit, 1, 0.7, 1.3),
      invariant("LVU", Scale, Logit, 1, 0.7, 1.3),   invariant("BLD", Scale, Logit, 1, 0.5, 1.5),
  };
}

std::vector<SiteParamTemplate> reference_templates() {
  return {
      {"X", SiteParam::Latitude, Transform::Logit, {0, 0}, {-0.05, 0.05}},
      {"Y", SiteParam::Longitude, Transform::Logit, {0, 0}, {-0.05, 0.05}},
      {"Z", SiteParam::Height, Transform::Logit, {-2, 2}, {0, 100}},
  };
}

TurbulenceCoupling reference_coupling() {
  TurbulenceCoupling c;
  c.K_u_range = {1.0, 210.0};
  c.K_w_range = {0.03, 12.5};
  return c;
}

Interval interval(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(what + " must be a [lo, hi] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

ParameterSpec parse_invariant(const json& j) {
  ParameterSpec s;
  s.name = j.at("name").get<std::string>();
  s.kind = parse_kind(j.value("kind", "const"));
  s.transform = parse_transform(j.at("transform").get<std::string>());
  s.default_value = j.at("default").get<double>();
  s.range = interval(j.at("range"), s.name + ".range");
  return s;
}

SiteParamTemplate parse_template(const json& j) {
  SiteParamTemplate t;
  t.name = j.at("name").get<std::string>();
  t.which = parse_site_param(j.at("which").get<std::string>());
  t.transform = parse_transform(j.at("transform").get<std::string>());
  t.offset_scale = j.contains("offset_scale") ? interval(j["offset_scale"], t.name + ".offset_scale") : Interval{0, 0};
  t.offset_shift = j.contains("offset_shift") ? interval(j["offset_shift"], t.name + ".offset_shift") : Interval{0, 0};
  return t;
}

Site parse_site(const json& j) {
  Site s;
  s.number = j.at("number").get<int>();
  s.code = j.at("code").get<std::string>();
  s.latitude = j.at("latitude").get<double>();
  s.longitude = j.at("longitude").get<double>();
  s.inlet_height = j.at("inlet_height").get<double>();
  s.n_obs = j.at("n_obs").get<int>();
  return s;
}

TurbulenceCoupling parse_coupling(const json& j) {
  TurbulenceCoupling c = reference_coupling();
  read(j, "tau_u", c.tau_u);
  read(j, "tau_w", c.tau_w);
  read(j, "sigma_u_default", c.sigma_u_default);
  read(j, "sigma_w_default", c.sigma_w_default);
  if (j.contains("sigma_u_range")) c.sigma_u_range = interval(j["sigma_u_range"], "sigma_u_range");
  if (j.contains("sigma_w_range")) c.sigma_w_range = interval(j["sigma_w_range"], "sigma_w_range");
  if (j.contains("K_u_range")) c.K_u_range = interval(j["K_u_range"], "K_u_range");
  if (j.contains("K_w_range")) c.K_w_range = interval(j["K_w_range"], "K_w_range");
  return c;
}

void parse_simulator(const json& j, Config& c) {
  read(j, "seed", c.simulator_seed);
  auto& s = c.simulator;
  read(j, "base_width", s.base_width);
  read(j, "transport_distance", s.transport_distance);
  read(j, "ftt_width", s.ftt_width);
  read(j, "bld_width", s.bld_width);
  read(j, "umm_width", s.umm_width);
  read(j, "bl_width", s.bl_width);
  read(j, "height_scale", s.height_scale);
  read(j, "mbl_amplitude", s.mbl_amplitude);
  read(j, "bl_amplitude", s.bl_amplitude);
}

void parse_inversion(const json& j, Config& c) {
  auto& v = c.inversion;
  read(j, "n_iter", v.n_iter);
  read(j, "burn_in", v.burn_in);
  read(j, "thin", v.thin);
  read(j, "batch_size", v.batch_size);
  if (j.contains("accept_band")) {
    const Interval band = interval(j["accept_band"], "accept_band");
    v.accept_lo = band.lo;
    v.accept_hi = band.hi;
  }
  read(j, "multiplier", v.multiplier);
  read(j, "seed", v.seed);
  read(j, "audit_every", v.audit_every);
  read(j, "x_step", v.x_step);
  read(j, "theta_step", v.theta_step);
  read(j, "sigma_step", v.sigma_step);
  if (j.contains("sigma_init") && !j["sigma_init"].is_null()) v.sigma_init = j["sigma_init"].get<double>();
  read(j, "sample_sigma", v.sample_sigma);
  read(j, "chains", c.chains);
  read(j, "prior_flux", c.prior_flux);
  read(j, "total_regions", c.total_regions);
  if (j.contains("priors")) {
    const auto& p = j["priors"];
    read(p, "x_mean", v.priors.x_mean);
    read(p, "x_sd", v.priors.x_sd);
    if (p.contains("sigma_y")) v.priors.sigma_y = interval(p["sigma_y"], "priors.sigma_y");
  }
}

void parse_experiment(const json& j, ExperimentSettings& e) {
  read(j, "replicates", e.replicates);
  read(j, "seed", e.seed);
  read(j, "noise_sd", e.noise_sd);
  read(j, "x_true_sd", e.x_true_sd);
  read(j, "ftt_true", e.ftt_true);
  read(j, "shifted_site", e.shifted_site);
  read(j, "height_true_offset", e.height_true_offset);
  read(j, "weak_parameters", e.weak_parameters);
}

}  // namespace

ParameterSpace reference_space() {
  return {reference_invariant(), reference_templates(), reference_sites(), reference_coupling()};
}

std::vector<Site> reference_sites() {
  return {
      {1, "MHD", 53.33, -9.90, 10, 120},
      {2, "RGL", 51.99, -2.54, 90, 114},
      {3, "TAC", 52.52, 1.14, 100, 119},
      {4, "TTA", 56.55, -2.99, 222, 67},
  };
}

Eigen::VectorXd Config::prior_flux_vector() const {
  if (prior_flux.empty()) return Eigen::VectorXd::Ones(n_regions);
  if (static_cast<int>(prior_flux.size()) != n_regions) throw ConfigError("prior_flux needs one value per region");
  return Eigen::Map<const Eigen::VectorXd>(prior_flux.data(), n_regions);
}

std::vector<Index> Config::total_subset() const {
  std::vector<Index> subset;
  if (total_regions.empty()) {
    for (Index r = 0; r < n_regions; ++r) subset.push_back(r);
    return subset;
  }
  for (int r : total_regions) {
    if (r < 1 || r > n_regions) throw ConfigError("total_regions entry " + std::to_string(r) + " out of range");
    subset.push_back(r - 1);
  }
  return subset;
}

Domain Config::domain() const { return make_domain(space.sites(), n_regions, domain_seed); }

Config parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be an object");

  Config c;
  try {
    std::vector<ParameterSpec> inv = reference_invariant();
    std::vector<SiteParamTemplate> templates = reference_templates();
    std::vector<Site> sites = reference_sites();
    TurbulenceCoupling coupling = reference_coupling();
    if (j.contains("parameters")) {
      const auto& p = j["parameters"];
      if (p.contains("invariant")) {
        inv.clear();
        for (const auto& e : p["invariant"]) inv.push_back(parse_invariant(e));
      }
      if (p.contains("site_specific")) {
        templates.clear();
        for (const auto& e : p["site_specific"]) templates.push_back(parse_template(e));
      }
      if (p.contains("turbulence")) coupling = parse_coupling(p["turbulence"]);
    }
    if (j.contains("sites")) {
      sites.clear();
      for (const auto& e : j["sites"]) sites.push_back(parse_site(e));
    }
    c.space = ParameterSpace(std::move(inv), std::move(templates), std::move(sites), coupling);

    if (j.contains("domain")) {
      read(j["domain"], "n_regions", c.n_regions);
      read(j["domain"], "seed", c.domain_seed);
    }
    if (j.contains("design")) {
      const auto& d = j["design"];
      read(d, "n_runs", c.design_runs);
      read(d, "seed", c.design_seed);
      read(d, "exchange_budget", c.design.exchange_budget);
      read(d, "restarts", c.design.restarts);
      read(d, "max_resamples", c.design.max_resamples);
    }
    if (j.contains("simulator")) parse_simulator(j["simulator"], c);
    if (j.contains("training")) {
      const auto& t = j["training"];
      if (t.contains("energy_threshold") && !t["energy_threshold"].is_null())
        c.reduction.energy_threshold = t["energy_threshold"].get<double>();
      read(t, "aic_delta", c.stepwise.delta);
    }
    if (j.contains("inversion")) parse_inversion(j["inversion"], c);
    if (j.contains("experiment")) parse_experiment(j["experiment"], c.experiment);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (c.n_regions < 1) throw ConfigError("domain.n_regions must be positive");
  if (c.design_runs < 2) throw ConfigError("design.n_runs must be at least 2");
  if (c.chains < 1) throw ConfigError("inversion.chains must be positive");
  if (c.experiment.replicates < 1) throw ConfigError("experiment.replicates must be positive");
  if (c.experiment.shifted_site < 1 || c.experiment.shifted_site > c.space.n_sites())
    throw ConfigError("experiment.shifted_site out of range");
  c.inversion.check();
  c.prior_flux_vector();
  c.total_subset();
  return c;
}

Config load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("config not found: " + path.string());
  return parse_config(csv::read_text(path));
}

}  // namespace emucal
