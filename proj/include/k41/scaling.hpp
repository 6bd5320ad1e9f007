#pragma once

#include "k41/simulation.hpp"
#include "k41/spectral_field.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace k41 {

struct ScaleParams {
  double lambda = 1.0;
  double beta = -1.0 / 3.0;
};

/// ũ(x) = λ^β u(λx): same labels on the box of side L/λ, coefficients times λ^β.
Field rescale_field(const Field& u, double lambda, double beta);

struct PhysicalParams {
  double nu = 0;
  double L = 0;
  double amp = 0;
};

/// (νλ^{β−1}, L/λ, λ^{(1+3β)/2}amp).
PhysicalParams transform_params(double nu, double L, double amp, double lambda, double beta);

/// K(ν, r) = (νr^{−4/3}, r^{−1}).
std::pair<double, double> map_K(double nu, double r);
/// K⁻¹(ν̃, r̃) = (ν̃r̃^{−4/3}, r̃^{−1}).
std::pair<double, double> map_K_inverse(double nu_tilde, double r_tilde);

/// Strictly monotone positive function on [lo, hi] with inverse by bisection in log space.
class MonotoneFunction {
 public:
  MonotoneFunction() = default;

  /// Log-log linear interpolation of a strictly monotone table with positive entries.
  static MonotoneFunction table(std::vector<double> xs, std::vector<double> ys, const std::string& name);
  /// Callable checked for strict monotonicity on a logarithmic sample of [lo, hi].
  static MonotoneFunction callable(std::function<double(double)> f, double lo, double hi, const std::string& name);

  double operator()(double x) const;
  /// x with f(x) = y; DomainError outside the range.
  double inverse(double y) const;
  bool contains(double x) const noexcept { return x >= lo_ && x <= hi_; }
  bool increasing() const noexcept { return increasing_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  /// f over the domain endpoints, ordered.
  std::pair<double, double> range() const;

 private:
  std::function<double(double)> f_;
  double lo_ = 0, hi_ = 0;
  bool increasing_ = false;
  std::string name_;
};

/// {(ν̃, L̃) : ν̃ <= ν̃₀, L̃ >= R̃₀(ν̃)}.
struct AdmissibleRegion {
  double nu0 = 0;
  MonotoneFunction Rtilde0;  ///< strictly decreasing, >= 1 on its domain
};

/// {(ν, r) : ν <= ν₀, C₀ <= rν^{−3/4} <= R₀(ν)}.
struct K41Window {
  double c0 = 0;
  double nu0 = 0;
  MonotoneFunction R0;  ///< strictly decreasing
};

/// Checks the invariants; throws ConfigError.
void validate(const AdmissibleRegion& region);
void validate(const K41Window& window);

/// Window from a region: F(x) = x^{−3/4}R̃₀(x), R₀(x) = F⁻¹(x^{−3/4})^{−3/4},
/// C₀ = ν̃₀^{−3/4}, ν₀ = F(ν̃₀)^{−4/3}.
K41Window derive_window(const AdmissibleRegion& region);

struct DerivedRegion {
  AdmissibleRegion region;
  double nu0_unshrunk = 0;  ///< C₀^{−4/3}
  double c0_effective = 0;  ///< ν̃₀^{−3/4} of the shrunk threshold
  bool shrunk = false;
};

/// Region from a window: G(x) = R₀(x)^{−4/3}, R̃₀(ν̃) = (ν̃/G⁻¹(ν̃))^{3/4}.
/// ν̃₀ = C₀^{−4/3} is lowered to G(ν₀) and to the point where R̃₀ = 1 when needed.
DerivedRegion derive_region(const K41Window& window);

enum class Membership { inside, outside, indeterminate };

Membership window_membership(const K41Window& window, double nu, double r);
Membership region_membership(const AdmissibleRegion& region, double nu_tilde, double r_tilde);

enum class Domain { k41_window, condition_a };

struct DomainSpec {
  AdmissibleRegion region;
  K41Window window;
};

/// Membership of (ν, r) in the window, or of (ν̃, r̃) in the Condition-A region.
Membership domain_membership(const DomainSpec& spec, Domain which, double x, double y);

enum class InitialField { zero, random };

struct ScaleVerifyOptions {
  std::int64_t steps = 200;
  InitialField initial = InitialField::zero;
  double initial_scale = 1.0;  ///< coefficient scale of the random initial field
};

struct ScaleVerifyResult {
  double max_discrepancy = 0;  ///< max over steps of max|ũ − R(u)| / max|R(u)|
  std::int64_t steps = 0;
  double lambda = 1, beta = 0;
  double dt = 0, dt_tilde = 0;
  PhysicalParams original, rescaled;
};

/// Runs u on (ν, L, amp) and ũ on the transformed parameters driven by the
/// rescaled increments, comparing ũ with rescale_field(u) after every step.
ScaleVerifyResult pathwise_scaling_verify(const SimulationConfig& config, double lambda, double beta,
                                          const ScaleVerifyOptions& options = {});

}  // namespace k41
