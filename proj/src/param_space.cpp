#include "emucal/param_space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "emucal/errors.hpp"

namespace emucal {

namespace {

double nominal_value(const Site& site, SiteParam which) {
  switch (which) {
    case SiteParam::Height: return site.inlet_height;
    case SiteParam::Latitude: return site.latitude;
    case SiteParam::Longitude: return site.longitude;
  }
  return 0.0;
}

std::string describe(const ParameterSpec& spec) {
  std::ostringstream os;
  os << spec.name << " [" << spec.range.lo << ", " << spec.range.hi << "]";
  return os.str();
}

}  // namespace

void ParameterSpec::check() const {
  if (!(range.lo < range.hi)) throw ConfigError("degenerate range for " + describe(*this));
  if (transform == Transform::Log && !(range.lo > 0.0))
    throw ConfigError("log transform needs a positive range for " + describe(*this));
  if (!range.contains(default_value))
    throw ConfigError("default outside range for " + describe(*this));
}

double normalize(double value, const ParameterSpec& spec) {
  return (value - spec.range.lo) / spec.range.width();
}

double denormalize(double u, const ParameterSpec& spec) { return spec.range.lo + u * spec.range.width(); }

double transform_forward(double value, const ParameterSpec& spec) {
  if (spec.transform == Transform::Log) {
    if (!(value > 0.0)) throw DomainError(spec.name + ": log of non-positive value");
    return std::log(value);
  }
  double u = normalize(value, spec);
  if (!(u > 0.0 && u < 1.0)) throw DomainError(spec.name + ": logit argument outside open range");
  return std::log(u) - std::log1p(-u);
}

double transform_inverse(double t, const ParameterSpec& spec) {
  if (spec.transform == Transform::Log) return std::exp(t);
  // Numerically stable logistic on both tails.
  double u = t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
  return denormalize(u, spec);
}

double log_jacobian(double value, const ParameterSpec& spec) {
  if (spec.transform == Transform::Log) return std::log(value);
  double u = normalize(value, spec);
  return std::log(spec.range.width()) + std::log(u) + std::log1p(-u);
}

double regression_coordinate(double value, const ParameterSpec& spec) {
  if (spec.transform == Transform::Log) return transform_forward(value, spec);
  double u = std::clamp(normalize(value, spec), kLogitMargin, 1.0 - kLogitMargin);
  return std::log(u) - std::log1p(-u);
}

CoupledTurbulence derive_coupled_turbulence(double sigma_u, const TurbulenceCoupling& c, Feasibility mode) {
  if (!(sigma_u > 0.0)) throw DomainError("sigma_u must be positive");
  CoupledTurbulence out;
  out.sigma_u = sigma_u;
  out.K_u = sigma_u * sigma_u * c.tau_u;
  const double K_u_default = c.sigma_u_default * c.sigma_u_default * c.tau_u;
  const double K_w_default = c.sigma_w_default * c.sigma_w_default * c.tau_w;
  const double scale = out.K_u / K_u_default;
  out.K_w = scale * K_w_default;
  out.sigma_w = std::sqrt(out.K_w / c.tau_w);
  out.feasible = c.sigma_u_range.contains(out.sigma_u) && c.sigma_w_range.contains(out.sigma_w) &&
                 c.K_u_range.contains(out.K_u) && c.K_w_range.contains(out.K_w);
  if (!out.feasible && mode == Feasibility::Strict) {
    std::ostringstream os;
    os << "sigma_u=" << out.sigma_u << " sigma_w=" << out.sigma_w << " K_u=" << out.K_u << " K_w=" << out.K_w;
    throw InfeasibleTurbulence(os.str());
  }
  return out;
}

ParameterSpace::ParameterSpace(std::vector<ParameterSpec> invariant, std::vector<SiteParamTemplate> site_templates,
                               std::vector<Site> sites, TurbulenceCoupling coupling)
    : invariant_(std::move(invariant)),
      templates_(std::move(site_templates)),
      sites_(std::move(sites)),
      coupling_(coupling) {
  for (Index i = 0; i < n_invariant(); ++i) {
    auto& spec = invariant_[i];
    spec.site_index.reset();
    spec.check();
    flat_.push_back(spec);
    slots_.push_back({std::nullopt, i});
    if (spec.name == "FTT") ftt_ = i;
  }
  for (int s = 0; s < static_cast<int>(sites_.size()); ++s) {
    for (const auto& tpl : templates_) {
      const double nominal = nominal_value(sites_[s], tpl.which);
      ParameterSpec spec;
      spec.name = tpl.name + "_" + std::to_string(sites_[s].number);
      spec.kind = ParamKind::Diff;
      spec.transform = tpl.transform;
      spec.default_value = nominal;
      spec.range = {nominal + tpl.offset_scale.lo * nominal + tpl.offset_shift.lo,
                    nominal + tpl.offset_scale.hi * nominal + tpl.offset_shift.hi};
      spec.site_index = s;
      spec.check();
      flat_.push_back(spec);
      slots_.push_back({s, static_cast<Index>(tpl.which)});
    }
  }
}

std::vector<std::string> ParameterSpace::column_names() const {
  std::vector<std::string> names;
  names.reserve(flat_.size());
  for (const auto& s : flat_) names.push_back(s.name);
  return names;
}

std::optional<Index> ParameterSpace::find(const std::string& column_name) const {
  for (Index i = 0; i < dimension(); ++i)
    if (flat_[i].name == column_name) return i;
  return std::nullopt;
}

Index ParameterSpace::site_param_index(int site, SiteParam which) const {
  for (Index k = 0; k < n_per_site(); ++k)
    if (templates_[k].which == which) return n_invariant() + site * n_per_site() + k;
  throw ConfigError("no site parameter " + to_string(which));
}

std::vector<Index> ParameterSpace::admissible_for_site(int site) const {
  std::vector<Index> out;
  for (Index i = 0; i < n_invariant(); ++i) out.push_back(i);
  for (Index k = 0; k < n_per_site(); ++k) out.push_back(n_invariant() + site * n_per_site() + k);
  return out;
}

ThetaVector ParameterSpace::default_theta() const {
  ThetaVector theta;
  theta.xi.resize(n_invariant());
  theta.kappa = Eigen::MatrixXd::Zero(n_sites(), kSiteParams);
  for (Index i = 0; i < dimension(); ++i) {
    const auto& slot = slots_[i];
    if (slot.site) theta.kappa(*slot.site, slot.position) = flat_[i].default_value;
    else theta.xi(slot.position) = flat_[i].default_value;
  }
  return theta;
}

Eigen::VectorXd ParameterSpace::flatten(const ThetaVector& theta) const {
  if (theta.xi.size() != n_invariant() || theta.kappa.rows() != n_sites() || theta.kappa.cols() != kSiteParams)
    throw DimensionMismatch("theta does not match parameter space");
  Eigen::VectorXd flat(dimension());
  for (Index i = 0; i < dimension(); ++i) {
    const auto& slot = slots_[i];
    flat(i) = slot.site ? theta.kappa(*slot.site, slot.position) : theta.xi(slot.position);
  }
  return flat;
}

ThetaVector ParameterSpace::unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat) const {
  if (flat.size() != dimension()) throw DimensionMismatch("flat theta has wrong length");
  ThetaVector theta = default_theta();
  for (Index i = 0; i < dimension(); ++i) {
    const auto& slot = slots_[i];
    if (slot.site) theta.kappa(*slot.site, slot.position) = flat(i);
    else theta.xi(slot.position) = flat(i);
  }
  return theta;
}

ValidationResult validate_flat(const Eigen::Ref<const Eigen::VectorXd>& flat, const ParameterSpace& space) {
  if (flat.size() != space.dimension()) throw DimensionMismatch("theta has wrong length");
  ValidationResult result;
  for (Index i = 0; i < space.dimension(); ++i) {
    const auto& spec = space.spec(i);
    if (!std::isfinite(flat(i)) || !spec.range.contains(flat(i))) result.violations.push_back(spec.name);
  }
  result.ok = result.violations.empty();
  return result;
}

ValidationResult validate_theta(const ThetaVector& theta, const ParameterSpace& space) {
  return validate_flat(space.flatten(theta), space);
}

std::string to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::Const: return "const";
    case ParamKind::Scale: return "scale";
    case ParamKind::Diff: return "diff";
  }
  return "?";
}

std::string to_string(Transform transform) { return transform == Transform::Log ? "log" : "logit"; }

std::string to_string(SiteParam which) {
  switch (which) {
    case SiteParam::Height: return "height";
    case SiteParam::Latitude: return "latitude";
    case SiteParam::Longitude: return "longitude";
  }
  return "?";
}

ParamKind parse_kind(const std::string& s) {
  if (s == "const") return ParamKind::Const;
  if (s == "scale") return ParamKind::Scale;
  if (s == "diff") return ParamKind::Diff;
  throw ConfigError("unknown parameter kind '" + s + "'");
}

Transform parse_transform(const std::string& s) {
  if (s == "log") return Transform::Log;
  if (s == "logit") return Transform::Logit;
  throw ConfigError("unknown transform '" + s + "'");
}

SiteParam parse_site_param(const std::string& s) {
  if (s == "height") return SiteParam::Height;
  if (s == "latitude") return SiteParam::Latitude;
  if (s == "longitude") return SiteParam::Longitude;
  throw ConfigError("unknown site parameter '" + s + "'");
}

}  // namespace emucal
