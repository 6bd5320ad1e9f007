#pragma once

#include "k41/noise.hpp"
#include "k41/stats.hpp"

namespace k41 {

/// Stationary E‖û(k)‖² = amp²|σ_k|²/(2ν|k|²) of the Ornstein–Uhlenbeck mode.
double stokes_mode_moment(double k2, double sigma_sq, double nu, double amp);

/// Exact stationary statistics of the Stokes system (no nonlinearity).
EnsembleStats stokes_stats(const NoiseSpec& spec, double nu);

/// Closed-form Stokes diagnostics.
class StokesSummary {
 public:
  StokesSummary(const NoiseSpec& spec, double nu);

  /// ν Σ|k|²E‖û‖² = ½amp²Σ|σ_k|².
  double epsilon() const noexcept { return epsilon_; }
  /// (Σ|σ_k|²/Σ|k|²|σ_k|²)^{1/2}.
  double theta_diss() const noexcept { return theta_; }
  /// Direction-averaged Σ|e^{-ik·re} − 1|²E‖û(k)‖².
  double s2(double r) const;
  const EnsembleStats& stats() const noexcept { return stats_; }

 private:
  EnsembleStats stats_;
  double epsilon_;
  double theta_;
};

StokesSummary stokes_summary(const NoiseSpec& spec, double nu);

}  // namespace k41
