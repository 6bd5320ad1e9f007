#pragma once

#include "k41/rng.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace k41 {

/// Normalized bump ρ(x) ∝ exp(−1/(1 − |x|²)) on the unit ball, ∫ρ = 1.
class RadialProfile {
 public:
  /// Shared instance; building the mass table costs a few milliseconds.
  static const RadialProfile& bump();

  double rho(double r) const;
  double rho_prime(double r) const;
  /// m(r) = 4π∫₀^r ρ(s)s²ds, m(1) = 1.
  double mass(double r) const;

  /// g(r) = m(r)/(4πr³) with h = g′/r and b = h′/r.
  struct Radial {
    double g = 0, h = 0, b = 0;
  };
  Radial radial(double r) const;

  double normalization() const noexcept { return c_; }

 private:
  RadialProfile();
  double c_ = 0;
  double step_ = 0;
  std::vector<double> m_;
  std::vector<double> series_g_, series_h_;  ///< coefficients in t = r²
};

enum class EddyOrder { grad, hess };

EddyOrder parse_eddy_order(const std::string& name);
std::string to_string(EddyOrder o);

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Tensor3 = std::array<Mat3, 3>;  ///< [k](i, j) = ∂_k ∂_j K_i

/// K₁(x) = m(|x|)x/(4π|x|³), K₁(0) = 0.
Vec3 kernel_K(const Vec3& x);
/// DK₁(x), (i, j) = ∂_j K_i.
Mat3 kernel_DK(const Vec3& x);
/// D²K₁(x).
Tensor3 kernel_D2K(const Vec3& x);
/// ‖DK₁‖²_F = 3g² + 2ghr² + h²r⁴ at radius r.
double kernel_DK_norm_sq(double r);
/// ‖D²K₁‖²_F = 15h²r² + 6hbr⁴ + b²r⁶ at radius r.
double kernel_D2K_norm_sq(double r);

struct EddyConfig {
  double eta = 0.05;
  std::int64_t samples = 100000;
  int steps = 200;             ///< path steps N
  double r_max = 50;           ///< start points truncated at ℓ·r_max
  std::uint64_t seed = 1;
  EddyOrder order = EddyOrder::grad;
  int threads = 1;
};

void validate(const EddyConfig& c);

/// One filament: thickness ℓ, U = ℓ^{1/3}, T = ℓ², and a Brownian core path.
struct FilamentDraw {
  double ell = 0;
  double U = 0;
  double T = 0;
  Vec3 x0 = Vec3::Zero();
  std::vector<Vec3> path;  ///< N + 1 points at uniform times on [0, T]
  double weight = 0;       ///< ℓ-law normalization × start-point importance correction
};

/// ∫_η^1 ℓ^{−4}dℓ = (η^{−3} − 1)/3.
double ell_normalization(double eta);

/// Inverse CDF of the ℓ^{−4} law on (η, 1).
double sample_ell(double eta, double u);

/// Start point at radius ℓ·R with R/(1+R) = s_max·u^{1/3}, i.e. density ∝ R²(1+R)^{−4} on [0, r_max];
/// returns the inverse volume density 4πQℓ³(1+R)⁴.
double sample_start(double scale, double r_max, CounterRng& rng, Vec3& x0);

/// Filament of thickness ℓ; its weight includes the ℓ-law normalization on (η, 1).
FilamentDraw sample_filament(double ell, const EddyConfig& config, CounterRng& rng);

/// (U²/ℓ⁴)·trapezoid over the path of ‖D^{order}K_ℓ(X_t)‖²_F.
double filament_contribution(const FilamentDraw& draw, EddyOrder order);

struct Estimate {
  double value = 0;
  double std_error = 0;
  std::int64_t samples = 0;
  double effective_samples = 0;  ///< (Σv)²/Σv²
  bool low_statistics = false;   ///< effective samples below 100
};

/// Weighted Monte-Carlo estimate of E|Du(0)|² or E|D²u(0)|².
Estimate mc_moment(const EddyConfig& config);

/// J = ∫dz E∫₀¹‖D^{order}K₁(z + B_s)‖²ds by the same machinery at ℓ = 1.
Estimate canonical_constant(EddyOrder order, std::int64_t samples, std::uint64_t seed, int steps = 200,
                            double r_max = 50, int threads = 1);

/// ∫_{|z|>r_max}‖D^{order}K₁(z)‖²dz, the part of J cut by the start-point truncation at a frozen path.
double truncation_tail(EddyOrder order, double r_max);

/// grad: J(3/4)(η^{−4/3} − 1); hess: J(3/10)(η^{−10/3} − 1).
double reduced_moment(EddyOrder order, double eta, double J);

/// x₀-integrated W[∫₀^T 1{X_t ∈ B(0, ℓ)}dt]; the exact value is (4/3)πℓ³T.
Estimate occupation_time_mc(double ell, double T, std::int64_t samples, std::uint64_t seed, int steps = 200,
                            int threads = 1);

struct SlopeFit {
  double slope = 0;
  double intercept = 0;
  double ci = 0;  ///< half-width of the 95% interval
};

/// Weighted least squares of log y on log x; errs are standard errors of y (all zero: ordinary fit).
SlopeFit slope_fit(const std::vector<double>& xs, const std::vector<double>& ys, const std::vector<double>& errs);

}  // namespace k41
