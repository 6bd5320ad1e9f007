#include "k41/diagnostics.hpp"

#include "k41/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace k41 {

DissipationSummary dissipation_summary(const EnsembleStats& stats, double nu) {
  if (!(nu > 0)) throw DomainError("viscosity must be positive");
  const double g = stats.grad_sq.mean;
  const double h = stats.hess_sq.mean;
  if (!(g > 0) || !(h > 0)) throw DegenerateMeasure("statistics of the zero field: epsilon and theta are undefined");
  DissipationSummary out;
  out.epsilon = nu * g;
  out.eta = std::pow(nu, 0.75) * std::pow(out.epsilon, -0.25);
  out.theta_diss = std::sqrt(g / h);
  return out;
}

namespace {

/// 2·4sin²(k_a r/2) per canonical mode along axis a (the factor 2 counts −k).
Eigen::VectorXd increment_kernel(const WaveLattice& lat, double r, int axis) {
  Eigen::VectorXd w(lat.half_size());
  for (Index h = 0; h < lat.half_size(); ++h) {
    const double s = std::sin(lat.half_wavevectors()(axis, h) * r / 2);
    w(h) = 8 * s * s;
  }
  return w;
}

}  // namespace

double s2_direction(const EnsembleStats& stats, double r, int axis) {
  const auto& lat = *stats.lattice;
  if (axis < 0 || axis >= lat.dim()) throw ConfigError("axis", "coordinate direction out of range");
  return increment_kernel(lat, r, axis).dot(stats.mode_m2);
}

std::vector<S2Point> estimate_s2_profile(const EnsembleStats& stats, const std::vector<double>& r_grid) {
  const auto& lat = *stats.lattice;
  const int d = lat.dim();
  const bool batched = stats.mode_m2_batches.cols() >= 2;
  std::vector<S2Point> out;
  out.reserve(r_grid.size());
  for (double r : r_grid) {
    if (r < 0) throw DomainError("separations must be nonnegative");
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(lat.half_size());
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int a = 0; a < d; ++a) {
      const Eigen::VectorXd w = increment_kernel(lat, r, a);
      const double v = w.dot(stats.mode_m2);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      avg += w;
    }
    avg /= d;
    S2Point p;
    p.r = r;
    p.value = avg.dot(stats.mode_m2);
    p.spread = hi - lo;
    if (batched) p.std_error = batch_stderr(stats.mode_m2_batches.transpose() * avg);
    out.push_back(p);
  }
  return out;
}

std::vector<double> default_r_grid(const WaveLattice& lattice, int points) {
  const double lo = lattice.length() / (2 * std::numbers::pi * lattice.truncation());
  const double hi = lattice.length() / 2;
  std::vector<double> r(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double t = points > 1 ? static_cast<double>(i) / (points - 1) : 0.0;
    r[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, t);
  }
  return r;
}

TaylorResult taylor_check(const std::vector<S2Point>& profile, double grad_sq, double theta_diss, int d) {
  TaylorResult out;
  out.upper_margin = std::numeric_limits<double>::infinity();
  out.lower_margin = std::numeric_limits<double>::infinity();
  const double cut = theta_diss / (4 * d);
  for (const auto& p : profile) {
    if (p.r <= 0) continue;
    const double quad = p.r * p.r * grad_sq;
    const double up = (quad - p.value) / quad;
    out.upper_margin = std::min(out.upper_margin, up);
    if (up < 0) out.upper_ok = false;
    if (p.r <= cut) {
      ++out.lower_points;
      const double low = (p.value - quad / (4 * d)) / quad;
      out.lower_margin = std::min(out.lower_margin, low);
      if (low < 0) out.lower_ok = false;
    }
  }
  return out;
}

namespace {

Window scan_window(const std::vector<S2Point>& profile, double lo, double hi) {
  Window w;
  w.lo = lo;
  w.hi = hi;
  w.ratio_min = std::numeric_limits<double>::infinity();
  w.ratio_max = 0;
  for (const auto& p : profile) {
    if (p.r < lo || p.r > hi || p.r <= 0) continue;
    const double ratio = p.value / std::cbrt(p.r * p.r);
    w.ratio_min = std::min(w.ratio_min, ratio);
    w.ratio_max = std::max(w.ratio_max, ratio);
    ++w.points;
  }
  w.empty = w.points == 0;
  if (w.empty) {
    w.ratio_min = std::numeric_limits<double>::quiet_NaN();
    w.ratio_max = std::numeric_limits<double>::quiet_NaN();
  }
  return w;
}

}  // namespace

std::vector<WindowRow> k41_window_scan(const std::vector<WindowInput>& inputs, double c0,
                                       const std::function<double(double)>& r0) {
  std::vector<WindowRow> rows;
  rows.reserve(inputs.size());
  for (const auto& in : inputs) {
    WindowRow row;
    row.nu = in.nu;
    row.epsilon = in.epsilon;
    row.eta = std::pow(in.nu, 0.75) * std::pow(in.epsilon, -0.25);
    row.theta_diss = in.theta_diss;
    row.theta_over_eta = in.theta_diss / row.eta;
    const double r = r0(in.nu);
    const double kolmogorov = std::pow(in.nu, 0.75);
    row.eta_window = scan_window(in.profile, c0 * row.eta, row.eta * r);
    row.viscous_window = scan_window(in.profile, c0 * kolmogorov, kolmogorov * r);
    rows.push_back(row);
  }
  return rows;
}

double example_s2_closed_form(double nu, double r) {
  if (!(nu > 0 && nu < 1)) throw DomainError("example structure function needs 0 < nu < 1");
  if (!(r > 0)) throw DomainError("separation must be positive");
  const double eta = std::pow(nu, 0.75);
  if (r <= eta) return 0.75 * r * r * (1 / nu - 1);
  if (r <= 1) return 2.25 * std::cbrt(r * r) - 1.5 * std::sqrt(nu) - 0.75 * r * r;
  // For r > 1 the integrand is l^{-1/3} on the whole range.
  return 1.5 * (1 - std::sqrt(nu));
}

namespace {

/// ∫_{1/2}^{3/2} 2(1 − cos κλ) dλ.
double kernel_term(double kappa) {
  const double a = std::abs(kappa);
  if (a == 0) return 0;
  if (a < 0.1) {
    double sum = 0, power = 1, fact = 1;
    for (int j = 1; j <= 9; ++j) {
      power *= a * a;
      fact *= (2 * j - 1) * (2 * j);
      const double moment = (std::pow(1.5, 2 * j + 1) - std::pow(0.5, 2 * j + 1)) / (2 * j + 1);
      sum += (j % 2 == 1 ? 2.0 : -2.0) * power / fact * moment;
    }
    return sum;
  }
  return 2 - (2 / a) * (std::sin(1.5 * a) - std::sin(0.5 * a));
}

}  // namespace

double condition_kernel_w(const Eigen::Ref<const Eigen::VectorXd>& k) {
  double w = 0;
  for (Index a = 0; a < k.size(); ++a) w += kernel_term(k(a));
  return w;
}

ConditionSums condition_sums(const EnsembleStats& stats) {
  const auto& lat = *stats.lattice;
  const int d = lat.dim();
  ConditionSums out;
  out.no_low_modes = lat.unit() > 1;
  for (Index h = 0; h < lat.half_size(); ++h) {
    const double m2 = 2 * stats.mode_m2(h);  // both k and −k
    const auto k = lat.half_wavevectors().col(h);
    const double k2 = lat.half_k2()(h);
    const double kn = std::sqrt(k2);
    double a = 0;
    for (int e = 0; e < d; ++e) {
      const double s = std::sin(k(e) / 2);
      a += 4 * s * s;
    }
    out.A_value += a / d * m2;
    out.Aprime_value += condition_kernel_w(k) * m2;
    if (kn <= 1) {
      out.B_low += k2 * m2;
    } else {
      out.B_high += m2;
    }
    if (kn <= 0.5) out.C_low_half += k2 * m2;
  }
  return out;
}

Sandwich kernel_sandwich(const WaveLattice& lattice) {
  Sandwich s;
  s.lower = std::numeric_limits<double>::infinity();
  s.upper = 0;
  for (Index h = 0; h < lattice.half_size(); ++h) {
    const double ratio = condition_kernel_w(lattice.half_wavevectors().col(h)) / std::min(lattice.half_k2()(h), 1.0);
    s.lower = std::min(s.lower, ratio);
    s.upper = std::max(s.upper, ratio);
  }
  return s;
}

IsotropyResult isotropy_directional_check(const EnsembleStats& stats, double sigmas) {
  const auto& lat = *stats.lattice;
  const int d = lat.dim();
  IsotropyResult out;
  out.g = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd weights(d, lat.half_size());
  for (int j = 0; j < d; ++j) {
    weights.row(j) = 2 * lat.half_wavevectors().row(j).array().square();
    out.g(j) = weights.row(j).dot(stats.mode_m2);
  }
  Index jmax = 0, jmin = 0;
  out.g.maxCoeff(&jmax);
  out.g.minCoeff(&jmin);
  out.spread = out.g(jmax) - out.g(jmin);
  const double total = out.g.sum();
  const double grad = 2 * lat.half_k2().dot(stats.mode_m2);
  out.sum_error = grad > 0 ? std::abs(total - grad) / grad : std::abs(total - grad);
  if (stats.mode_m2_batches.cols() >= 2) {
    const Eigen::VectorXd diff = stats.mode_m2_batches.transpose() * (weights.row(jmax) - weights.row(jmin)).transpose();
    out.tolerance = sigmas * batch_stderr(diff);
  } else {
    out.tolerance = 1e-12 * std::max(total, std::numeric_limits<double>::min());
  }
  out.passed = out.spread <= out.tolerance && out.sum_error <= 1e-12;
  return out;
}

std::vector<BalanceEntry> balance_checks(const EnsembleStats& stats, const NoiseSpec& spec, double nu, double sigmas) {
  const double amp2 = spec.amp() * spec.amp();
  std::vector<BalanceEntry> out;
  const bool exact = stats.grad_sq.batches.size() < 2;

  auto finish = [&](BalanceEntry& e) {
    e.rel_err = e.rhs != 0 ? (e.lhs - e.rhs) / e.rhs : e.lhs - e.rhs;
    if (exact) {
      e.passed = std::abs(e.lhs - e.rhs) <= 1e-10 * std::max(std::abs(e.lhs), std::abs(e.rhs));
    } else {
      e.passed = std::abs(e.lhs - e.rhs) <= sigmas * e.std_error;
    }
  };

  BalanceEntry energy;
  energy.name = "energy";
  energy.lhs = nu * stats.grad_sq.mean;
  energy.rhs = 0.5 * amp2 * spec.sigma_sq_sum();
  energy.std_error = nu * stats.grad_sq.std_error;
  finish(energy);
  out.push_back(energy);

  BalanceEntry enstrophy;
  enstrophy.name = "enstrophy";
  enstrophy.lhs = nu * stats.curl_grad_sq.mean;
  const double injected = 0.5 * amp2 * spec.k2_sigma_sq_sum();
  if (stats.lattice->dim() == 2) {
    enstrophy.rhs = injected;
    enstrophy.std_error = nu * stats.curl_grad_sq.std_error;
    finish(enstrophy);
  } else {
    enstrophy.rhs = stats.mean_stretch.mean + injected;
    const auto& a = stats.curl_grad_sq.batches;
    const auto& b = stats.mean_stretch.batches;
    if (a.size() >= 2 && a.size() == b.size()) {
      enstrophy.std_error = batch_stderr(nu * a - b);
    } else {
      enstrophy.std_error = std::hypot(nu * stats.curl_grad_sq.std_error, stats.mean_stretch.std_error);
    }
    finish(enstrophy);
    // The Galerkin system satisfies the inequality with equality; both are checked.
    if (!exact && enstrophy.lhs > enstrophy.rhs + sigmas * enstrophy.std_error) enstrophy.passed = false;
  }
  out.push_back(enstrophy);

  BalanceEntry holder;
  holder.name = "holder";
  holder.lhs = std::sqrt(stats.grad_sq.mean);
  holder.rhs = std::cbrt(stats.stretch_l2_sq.mean);
  holder.rel_err = holder.rhs != 0 ? (holder.lhs - holder.rhs) / holder.rhs : 0.0;
  holder.asserted = false;
  holder.passed = true;
  out.push_back(holder);
  return out;
}

DiagnosticsReport build_report(const EnsembleStats& stats, const NoiseSpec& spec, double nu,
                               const std::vector<double>& r_grid, double c0,
                               const std::function<double(double)>& r0) {
  DiagnosticsReport rep;
  rep.nu = nu;
  rep.dissipation = dissipation_summary(stats, nu);
  rep.s2 = estimate_s2_profile(stats, r_grid);
  rep.taylor = taylor_check(rep.s2, stats.grad_sq.mean, rep.dissipation.theta_diss, stats.lattice->dim());
  WindowInput in{nu, rep.dissipation.epsilon, rep.dissipation.theta_diss, rep.s2};
  rep.window = k41_window_scan({in}, c0, r0).front();
  rep.conditions = condition_sums(stats);
  rep.stretching.mean = stats.mean_stretch.mean;
  rep.stretching.l2_sq = stats.stretch_l2_sq.mean;
  rep.stretching.holder_lhs = std::sqrt(stats.grad_sq.mean);
  rep.stretching.holder_rhs = std::cbrt(stats.stretch_l2_sq.mean);
  rep.balance = balance_checks(stats, spec, nu);
  rep.isotropy = isotropy_directional_check(stats);
  return rep;
}

}  // namespace k41
