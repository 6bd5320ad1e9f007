#pragma once

#include "k41/noise.hpp"
#include "k41/nonlinear.hpp"
#include "k41/spectral_field.hpp"
#include "k41/stats.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace k41 {

enum class Stepper { euler_maruyama, exponential_euler };

Stepper parse_stepper(const std::string& name);
std::string to_string(Stepper s);

/// Galerkin system du + [νAu + πB(u,u)]dt = amp·Σσ_k dβ_k e^{-ik·x} on Λ^{(n)}_L.
struct SimulationConfig {
  int d = 2;
  double L = 1.0;
  int n = 16;
  double nu = 0.1;
  double amp = 1.0;
  double forcing_kf = 1.0;         ///< forced shells |m| <= kf
  double forcing_intensity = 1.0;  ///< profile value on the forced shells
  double dt = 0.0;                 ///< 0 selects default_dt
  double t_burn = 1.0;
  double t_avg = 10.0;
  std::uint64_t seed = 1;
  std::uint32_t trajectory = 0;
  Stepper stepper = Stepper::exponential_euler;
  Nonlinearity nonlinearity = Nonlinearity::pseudospectral;
  bool linear = false;       ///< drop B (Stokes system)
  int batches = 20;
  int sample_every = 1;      ///< steps between samples
  int stretch_every = 10;    ///< samples between mean-stretching evaluations (3D)
  int stretch_l2_every = 100;///< samples between squared-stretching evaluations (3D)
  bool progress = false;     ///< progress lines on standard error
};

/// Throws ConfigError naming the offending field.
void validate(const SimulationConfig& c);

/// Isotropic shell forcing of the config.
NoiseSpec make_noise(const SimulationConfig& c);

/// 0.1 / (ν(2πn/L)² + (2πn/L)·u_rms) with u_rms from the Stokes energy;
/// the viscous term is dropped for exponential_euler, which integrates it exactly.
double default_dt(const SimulationConfig& c, const NoiseSpec& noise);

/// Per-mode coefficients of one time step.
class StepKernel {
 public:
  StepKernel(const SimulationConfig& c, const NoiseSpec& noise, double dt);

  /// u ← u + dt(−νAu − πB) + amp σΔB (Euler–Maruyama), or the exponential
  /// Euler update with exact OU noise. `b` holds πB(u,u) (ignored when linear).
  void apply(Field& u, const Field& b, const Increments& db) const;

  double dt() const noexcept { return dt_; }

 private:
  std::vector<Eigen::MatrixXcd> forcing_;  ///< amp·σ per canonical mode, empty when zero
  bool linear_;
  double dt_;
  Eigen::VectorXd decay_;   ///< multiplier of û
  Eigen::VectorXd drift_;   ///< multiplier of −πB
  Eigen::VectorXd shaping_; ///< multiplier of amp σ ΔB
};

/// One step of the configured scheme from `u` with increments `db`.
Field step(const Field& u, const SimulationConfig& c, const NoiseSpec& noise, const Increments& db);

/// A single trajectory from u(0) = 0, with increments keyed by (seed, trajectory, step).
class Trajectory {
 public:
  explicit Trajectory(const SimulationConfig& c);
  Trajectory(const SimulationConfig& c, NoiseSpec noise);

  const SimulationConfig& config() const noexcept { return config_; }
  const NoiseSpec& noise() const noexcept { return noise_; }
  double dt() const noexcept { return kernel_.dt(); }
  const Field& state() const noexcept { return u_; }
  std::int64_t steps_taken() const noexcept { return steps_; }
  double time() const noexcept { return static_cast<double>(steps_) * dt(); }
  std::int64_t burn_steps() const;
  std::int64_t average_steps() const;

  void set_state(Field u);

  /// Standard Brownian increments of step `index` (a pure function of the key).
  Increments increments(std::int64_t index) const;

  /// One step driven by the keyed increments.
  void advance();
  /// One step driven by the given increments.
  void advance(const Increments& db);
  void advance(std::int64_t steps);

  /// Steps until the burn-in horizon.
  void burn_in();

  /// Called after every step.
  std::function<void(const Trajectory&)> on_step;

 private:
  SimulationConfig config_;
  NoiseSpec noise_;
  StepKernel kernel_;
  NonlinearOperator op_;
  Field u_;
  Field b_;
  std::int64_t steps_ = 0;
};

/// Integrates the burn-in phase and returns the trajectory positioned at T_burn.
Trajectory run_trajectory(const SimulationConfig& c);

/// Time averages over [T_burn, T_burn + T_avg] with batch-means errors.
EnsembleStats time_average_stats(Trajectory& t);

/// Stats of a single field (one sample, no error bars).
EnsembleStats field_stats(const Field& u, double nu, double amp);

}  // namespace k41
