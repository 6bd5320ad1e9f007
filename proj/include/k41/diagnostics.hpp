#pragma once

#include "k41/noise.hpp"
#include "k41/stats.hpp"

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace k41 {

struct DissipationSummary {
  double epsilon = 0;     ///< ν·grad_sq
  double eta = 0;         ///< ν^{3/4}ε^{-1/4}
  double theta_diss = 0;  ///< (grad_sq/hess_sq)^{1/2}
};

/// ε, η and θ of a measure; zero statistics raise DegenerateMeasure.
DissipationSummary dissipation_summary(const EnsembleStats& stats, double nu);

struct S2Point {
  double r = 0;
  double value = 0;      ///< direction average
  double std_error = 0;  ///< from batch means of the mode moments
  double spread = 0;     ///< max − min over coordinate directions
};

/// Σ_k |e^{-ik_a r} − 1|² E‖û(k)‖² along coordinate axis a.
double s2_direction(const EnsembleStats& stats, double r, int axis);

/// Direction-averaged S₂ on the given separations.
std::vector<S2Point> estimate_s2_profile(const EnsembleStats& stats, const std::vector<double>& r_grid);

/// Logarithmic grid of `points` separations spanning [L/(2πn), L/2].
std::vector<double> default_r_grid(const WaveLattice& lattice, int points = 64);

struct TaylorResult {
  bool upper_ok = true;
  bool lower_ok = true;
  double upper_margin = 0;  ///< min over r of (r²·grad_sq − S₂)/(r²·grad_sq)
  double lower_margin = 0;  ///< min over tested r of (S₂ − r²·grad_sq/(4d))/(r²·grad_sq)
  int lower_points = 0;     ///< grid points with r <= θ/(4d)
  bool passed() const { return upper_ok && lower_ok; }
};

/// r²·grad_sq/(4d) <= S₂(r) <= r²·grad_sq, the lower bound only for r <= θ/(4d).
TaylorResult taylor_check(const std::vector<S2Point>& profile, double grad_sq, double theta_diss, int d);

/// One measure entering a K41 window scan.
struct WindowInput {
  double nu = 0;
  double epsilon = 0;
  double theta_diss = 0;
  std::vector<S2Point> profile;
};

struct Window {
  double lo = 0, hi = 0;
  int points = 0;
  bool empty = true;
  double ratio_min = 0, ratio_max = 0;  ///< extremes of S₂(r)/r^{2/3}
};

struct WindowRow {
  double nu = 0;
  double epsilon = 0;
  double eta = 0;
  double theta_diss = 0;
  double theta_over_eta = 0;
  Window eta_window;       ///< [C₀η, ηR₀(ν)]
  Window viscous_window;   ///< [C₀ν^{3/4}, ν^{3/4}R₀(ν)]
};

/// Extremes of S₂(r)/r^{2/3} over the K41 windows of every measure.
std::vector<WindowRow> k41_window_scan(const std::vector<WindowInput>& inputs, double c0,
                                       const std::function<double(double)>& r0);

/// S₂(r) = ∫_η^1 l^{2/3}((l∧r)/l)² dl/l with η = ν^{3/4}, in closed form.
double example_s2_closed_form(double nu, double r);

/// Σ_a ∫_{1/2}^{3/2} |e^{iλk_a} − 1|² dλ in closed form.
double condition_kernel_w(const Eigen::Ref<const Eigen::VectorXd>& k);

struct ConditionSums {
  double A_value = 0;
  double Aprime_value = 0;
  double B_low = 0;
  double B_high = 0;
  double C_low_half = 0;
  bool no_low_modes = false;  ///< no mode has ‖k‖ <= 1
};

ConditionSums condition_sums(const EnsembleStats& stats);

struct Sandwich {
  double lower = 0;  ///< min of w(k)/(‖k‖²∧1) over the lattice
  double upper = 0;  ///< max of the same ratio
};

Sandwich kernel_sandwich(const WaveLattice& lattice);

struct IsotropyResult {
  Eigen::VectorXd g;        ///< Σ_k k_j² E‖û(k)‖² per direction
  double spread = 0;        ///< max_j g_j − min_j g_j
  double tolerance = 0;
  double sum_error = 0;     ///< |Σ_j g_j − grad_sq| / grad_sq
  bool passed = false;
};

/// Per-direction gradient moments; the spread must sit within `sigmas` errors.
IsotropyResult isotropy_directional_check(const EnsembleStats& stats, double sigmas = 3.0);

struct BalanceEntry {
  std::string name;
  double lhs = 0;
  double rhs = 0;
  double rel_err = 0;
  double std_error = 0;
  bool asserted = true;  ///< false for reported-only pairs
  bool passed = true;
};

/// Energy and enstrophy balances of a stationary measure and the Hölder pair.
std::vector<BalanceEntry> balance_checks(const EnsembleStats& stats, const NoiseSpec& spec, double nu,
                                         double sigmas = 3.0);

struct StretchingSummary {
  double mean = 0;
  double l2_sq = 0;
  double holder_lhs = 0;  ///< grad_sq^{1/2}
  double holder_rhs = 0;  ///< stretch_l2_sq^{1/3}
};

struct DiagnosticsReport {
  double nu = 0;
  DissipationSummary dissipation;
  std::vector<S2Point> s2;
  TaylorResult taylor;
  WindowRow window;
  ConditionSums conditions;
  StretchingSummary stretching;
  std::vector<BalanceEntry> balance;
  IsotropyResult isotropy;
};

/// Full report of one measure; the window uses C₀ and R₀.
DiagnosticsReport build_report(const EnsembleStats& stats, const NoiseSpec& spec, double nu,
                               const std::vector<double>& r_grid, double c0,
                               const std::function<double(double)>& r0);

}  // namespace k41
