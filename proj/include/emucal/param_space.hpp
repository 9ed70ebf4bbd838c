#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace emucal {

using Index = Eigen::Index;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  double midpoint() const { return 0.5 * (lo + hi); }
  bool contains(double v) const { return v >= lo && v <= hi; }
  bool operator==(const Interval&) const = default;
};

enum class ParamKind { Const, Scale, Diff };
enum class Transform { Log, Logit };

/// Monitoring site with nominal release location. Site numbers follow the
/// canonical ordering used for row blocks of every sensitivity matrix.
struct Site {
  int number = 0;
  std::string code;
  double latitude = 0.0;   // degrees
  double longitude = 0.0;  // degrees
  double inlet_height = 0.0;  // metres above ground
  int n_obs = 0;
};

/// Column of the per-site parameter block. Order matches ThetaVector::kappa.
enum class SiteParam { Height = 0, Latitude = 1, Longitude = 2 };
inline constexpr Index kSiteParams = 3;

struct ParameterSpec {
  std::string name;
  ParamKind kind = ParamKind::Const;
  Transform transform = Transform::Logit;
  double default_value = 0.0;
  Interval range;
  std::optional<int> site_index;  // 0-based; present iff site-specific

  /// Checks a < b and a > 0 for Log; throws ConfigError.
  void check() const;
};

/// Range-normalised coordinate (v - a) / (b - a).
double normalize(double value, const ParameterSpec& spec);
double denormalize(double u, const ParameterSpec& spec);

/// Log: ln(v). Logit: logit of the range-normalised coordinate.
/// Throws DomainError at or beyond the Logit endpoints, or for v <= 0 under Log.
double transform_forward(double value, const ParameterSpec& spec);
double transform_inverse(double t, const ParameterSpec& spec);

/// ln |d value / d t| evaluated at a natural-unit value.
double log_jacobian(double value, const ParameterSpec& spec);

/// Emulator input coordinate. Same as transform_forward except that Logit
/// arguments are clamped to u in [margin, 1 - margin], so closed-range
/// defaults (MBL = 40 at its lower bound) map to a finite value.
inline constexpr double kLogitMargin = 1e-3;
double regression_coordinate(double value, const ParameterSpec& spec);

/// Free-tropospheric turbulence coupling: K = sigma^2 * tau with fixed
/// Lagrangian timescales; sigma_w follows sigma_u through the K_u scale.
struct TurbulenceCoupling {
  double tau_u = 300.0;
  double tau_w = 100.0;
  double sigma_u_default = 0.25;
  double sigma_w_default = 0.1;
  Interval sigma_u_range{0.06, 0.82};
  Interval sigma_w_range{0.02, 0.35};
  Interval K_u_range;
  Interval K_w_range;
};

struct CoupledTurbulence {
  double sigma_u = 0.0;
  double sigma_w = 0.0;
  double K_u = 0.0;
  double K_w = 0.0;
  bool feasible = false;
};

enum class Feasibility { Flag, Strict };

/// Throws DomainError for sigma_u <= 0, InfeasibleTurbulence in Strict mode.
CoupledTurbulence derive_coupled_turbulence(double sigma_u, const TurbulenceCoupling& coupling,
                                            Feasibility mode = Feasibility::Flag);

/// Site-invariant values xi (length I) plus per-site values kappa
/// (n_sites x 3, columns height / latitude / longitude).
struct ThetaVector {
  Eigen::VectorXd xi;
  Eigen::MatrixXd kappa;
};

/// Template for a site-specific (Diff) parameter. The plausible offset is
/// [scale.lo * nominal + shift.lo, scale.hi * nominal + shift.hi] and is added
/// to the nominal site value to give an absolute interval.
struct SiteParamTemplate {
  std::string name;  // "X", "Y", "Z"
  SiteParam which = SiteParam::Height;
  Transform transform = Transform::Logit;
  Interval offset_scale;
  Interval offset_shift;
};

struct ValidationResult {
  bool ok = true;
  std::vector<std::string> violations;
};

/// Full simulator input space: invariant specs followed by per-site specs
/// materialised for each site. The flattened order is the design CSV order
/// (invariant..., X_1, Y_1, Z_1, X_2, ...).
class ParameterSpace {
 public:
  ParameterSpace() = default;
  ParameterSpace(std::vector<ParameterSpec> invariant, std::vector<SiteParamTemplate> site_templates,
                 std::vector<Site> sites, TurbulenceCoupling coupling);

  Index n_invariant() const { return static_cast<Index>(invariant_.size()); }
  Index n_sites() const { return static_cast<Index>(sites_.size()); }
  Index n_per_site() const { return static_cast<Index>(templates_.size()); }
  Index dimension() const { return static_cast<Index>(flat_.size()); }

  const std::vector<ParameterSpec>& specs() const { return flat_; }
  const ParameterSpec& spec(Index flat_index) const { return flat_.at(flat_index); }
  const std::vector<Site>& sites() const { return sites_; }
  const std::vector<ParameterSpec>& invariant_specs() const { return invariant_; }
  const std::vector<SiteParamTemplate>& site_templates() const { return templates_; }
  const TurbulenceCoupling& coupling() const { return coupling_; }

  /// Column labels: invariant names, then name_<site number>.
  std::vector<std::string> column_names() const;
  std::optional<Index> find(const std::string& column_name) const;
  /// Flattened index of the FTT (sigma_u) column if present.
  std::optional<Index> ftt_index() const { return ftt_; }
  /// Flattened index of a site parameter.
  Index site_param_index(int site, SiteParam which) const;

  /// Flattened indices admissible for a site's emulator: all invariant
  /// parameters plus that site's own parameters.
  std::vector<Index> admissible_for_site(int site) const;

  ThetaVector default_theta() const;
  Eigen::VectorXd default_flat() const { return flatten(default_theta()); }
  Eigen::VectorXd flatten(const ThetaVector& theta) const;
  ThetaVector unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat) const;

 private:
  struct Slot {
    std::optional<int> site;
    Index position = 0;  // xi index, or kappa column
  };

  std::vector<ParameterSpec> invariant_;
  std::vector<SiteParamTemplate> templates_;
  std::vector<Site> sites_;
  TurbulenceCoupling coupling_;
  std::vector<ParameterSpec> flat_;
  std::vector<Slot> slots_;
  std::optional<Index> ftt_;
};

/// True iff every component lies in its closed range. Throws DimensionMismatch.
ValidationResult validate_theta(const ThetaVector& theta, const ParameterSpace& space);
ValidationResult validate_flat(const Eigen::Ref<const Eigen::VectorXd>& flat, const ParameterSpace& space);

std::string to_string(ParamKind kind);
std::string to_string(Transform transform);
std::string to_string(SiteParam which);
ParamKind parse_kind(const std::string& s);
Transform parse_transform(const std::string& s);
SiteParam parse_site_param(const std::string& s);

}  // namespace emucal
