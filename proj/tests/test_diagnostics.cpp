#include <doctest.h>

#include "k41/diagnostics.hpp"
#include "k41/error.hpp"
#include "k41/simulation.hpp"
#include "k41/stokes.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace k41;

namespace {

constexpr double pi = std::numbers::pi;

double quad(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-14);
}

NoiseSpec forced_spec(int d, int n, double L = 1.0) {
  auto lat = build_lattice(d, L, n);
  return make_isotropic_spec(lat, shell_profile(lat->unit(), 2.0), 11);
}

}  // namespace

TEST_CASE("example structure function against quadrature") {
  for (double nu : {1e-6, 1e-3, 0.2}) {
    const double eta = std::pow(nu, 0.75);
    for (double r : {0.3 * eta, eta, 3 * eta, 0.01, 0.5, 1.0, 2.0}) {
      auto integrand = [&](double l) { return std::pow(l, 2.0 / 3) * std::pow(std::min(l, r) / l, 2) / l; };
      const double q = r > eta && r < 1 ? quad(integrand, eta, r) + quad(integrand, r, 1) : quad(integrand, eta, 1);
      CHECK(example_s2_closed_form(nu, r) == doctest::Approx(q).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(example_s2_closed_form(1.0, 0.1), DomainError);
  CHECK_THROWS_AS(example_s2_closed_form(0.1, 0.0), DomainError);
}

TEST_CASE("example structure function obeys the K41 window") {
  // C₀ = 4 and R₀ = ν^{-3/4}/2 put the window inside [4η, 1/2].
  for (double nu : {1e-8, 1e-5, 1e-3}) {
    const double eta = std::pow(nu, 0.75);
    double lo = 1e300, hi = 0;
    for (int i = 0; i <= 200; ++i) {
      const double r = 4 * eta * std::pow(0.5 / (4 * eta), i / 200.0);
      const double ratio = example_s2_closed_form(nu, r) / std::cbrt(r * r);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    CHECK(lo >= 0.5);
    CHECK(hi <= 2.25);
  }
  // Below η the ratio degenerates: S₂/r^{2/3} ~ ν^{-1}r^{4/3} is not bounded below uniformly.
  const double nu = 1e-6, r = 1e-3 * std::pow(nu, 0.75);
  CHECK(example_s2_closed_form(nu, r) / std::cbrt(r * r) < 0.01);
}

TEST_CASE("window scan uses closed windows") {
  std::vector<S2Point> profile;
  for (double r : {0.1, 0.2, 0.4, 0.8}) profile.push_back({r, std::cbrt(r * r) * (1 + r), 0, 0});
  WindowInput in{1.0, 1.0, 1.0, profile};
  const auto row = k41_window_scan({in}, 0.2, [](double) { return 0.4; }).front();
  CHECK(row.eta == doctest::Approx(1));
  CHECK(row.viscous_window.points == 2);
  CHECK(row.viscous_window.ratio_min == doctest::Approx(1.2));
  CHECK(row.viscous_window.ratio_max == doctest::Approx(1.4));
  const auto empty = k41_window_scan({in}, 0.5, [](double) { return 0.3; }).front();
  CHECK(empty.eta_window.empty);
  CHECK(std::isnan(empty.eta_window.ratio_min));
}

TEST_CASE("condition kernel against quadrature") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int i = 0; i < 50; ++i) {
    Eigen::Vector3d k(u(gen), u(gen) * 1e-3, u(gen) * 1e-2);
    double q = 0;
    for (int a = 0; a < 3; ++a) q += quad([&](double l) { return std::norm(std::polar(1.0, l * k(a)) - 1.0); }, 0.5, 1.5);
    CHECK(condition_kernel_w(k) == doctest::Approx(q).epsilon(1e-12).scale(1e-14));
  }
  CHECK(condition_kernel_w(Eigen::Vector2d::Zero()) == 0);
  // Small κ: w ≈ (13/12)κ².
  CHECK(condition_kernel_w(Eigen::Matrix<double, 1, 1>(1e-4)) == doctest::Approx(13.0 / 12 * 1e-8).epsilon(1e-8));
}

TEST_CASE("condition kernel is comparable to min(|k|^2, 1)") {
  for (int d : {2, 3}) {
    for (double L : {0.5, 1.0, 6.0, 40.0}) {
      const auto lat = build_lattice(d, L, 6);
      const auto s = kernel_sandwich(*lat);
      CHECK(s.lower > 0);
      CHECK(s.upper <= 4.0 * d);
      CHECK(s.lower <= s.upper);
    }
  }
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> lg(-4, 3);
  std::uniform_int_distribution<int> axis(0, 2);
  double lower = 1e300, upper = 0;
  for (int i = 0; i < 20000; ++i) {
    Eigen::Vector3d k = Eigen::Vector3d::Zero();
    k(axis(gen)) = std::pow(10.0, lg(gen));
    k(axis(gen)) += std::pow(10.0, lg(gen));
    const double ratio = condition_kernel_w(k) / std::min(k.squaredNorm(), 1.0);
    lower = std::min(lower, ratio);
    upper = std::max(upper, ratio);
  }
  CHECK(lower > 0.5);
  CHECK(upper < 12.0);
}

TEST_CASE("condition sums of a single low mode") {
  // Spacing 1/2: the mode (1, 0) has |k| = 1/2.
  const auto lat = build_lattice(2, 4 * pi, 3);
  Eigen::Vector2i m(1, 0);
  bool conj = false;
  const Index h = lat->full_to_half(lat->find(m), conj);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(lat->half_size());
  m2(h) = 3.0;
  const auto s = condition_sums(exact_stats(lat, m2, 0.1, 1.0));
  CHECK_FALSE(s.no_low_modes);
  CHECK(s.B_low == doctest::Approx(2 * 0.25 * 3.0));
  CHECK(s.C_low_half == doctest::Approx(2 * 0.25 * 3.0));
  CHECK(s.B_high == 0);
  CHECK(s.A_value == doctest::Approx(2 * 3.0 * 4 * std::pow(std::sin(0.25), 2) / 2));
  CHECK(s.Aprime_value == doctest::Approx(2 * 3.0 * condition_kernel_w(Eigen::Vector2d(0.5, 0))));

  const auto coarse = build_lattice(2, 1.0, 3);
  const auto c = condition_sums(exact_stats(coarse, Eigen::VectorXd::Ones(coarse->half_size()), 0.1, 1.0));
  CHECK(c.no_low_modes);
  CHECK(c.B_low == 0);
  CHECK(c.B_high == doctest::Approx(static_cast<double>(coarse->size())));
}

TEST_CASE("Stokes profiles respect the Taylor bounds") {
  for (int d : {2, 3}) {
    const auto spec = forced_spec(d, d == 2 ? 12 : 5);
    for (double nu : {0.05, 0.5}) {
      const auto summary = stokes_summary(spec, nu);
      const auto& stats = summary.stats();
      const auto grid = default_r_grid(spec.lattice(), 40);
      CHECK(grid.front() == doctest::Approx(1.0 / (2 * pi * spec.lattice().truncation())));
      CHECK(grid.back() == doctest::Approx(0.5));
      auto fine = grid;
      for (int i = 0; i < 10; ++i) fine.push_back(1e-4 * std::pow(10.0, i / 5.0));
      const auto profile = estimate_s2_profile(stats, fine);
      for (const auto& p : profile) CHECK(p.value == doctest::Approx(summary.s2(p.r)).epsilon(1e-12));
      const auto diss = dissipation_summary(stats, nu);
      CHECK(diss.epsilon == doctest::Approx(summary.epsilon()).epsilon(1e-12));
      CHECK(diss.theta_diss == doctest::Approx(summary.theta_diss()).epsilon(1e-12));
      const auto t = taylor_check(profile, stats.grad_sq.mean, diss.theta_diss, d);
      CHECK(t.passed());
      CHECK(t.lower_points > 0);
      CHECK(t.upper_margin >= 0);
    }
  }
}

TEST_CASE("Stokes scale ratio grows as viscosity decreases") {
  const auto spec = forced_spec(3, 4);
  double prev = 0;
  for (double nu : {1.0, 0.3, 0.1, 0.03}) {
    const auto d = dissipation_summary(stokes_stats(spec, nu), nu);
    CHECK(d.theta_diss / d.eta > prev);
    prev = d.theta_diss / d.eta;
  }
  const auto lat = build_lattice(2, 1.0, 3);
  CHECK_THROWS_AS(dissipation_summary(exact_stats(lat, Eigen::VectorXd::Zero(lat->half_size()), 0.1, 1.0), 0.1),
                  DegenerateMeasure);
}

TEST_CASE("isotropy check on exact measures") {
  const auto spec = forced_spec(3, 4);
  const auto iso = isotropy_directional_check(stokes_stats(spec, 0.2));
  CHECK(iso.passed);
  CHECK(iso.sum_error < 1e-12);

  const auto lat = build_lattice(2, 1.0, 3);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(lat->half_size());
  for (Index h = 0; h < lat->half_size(); ++h)
    if (lat->half_modes()(1, h) == 0) m2(h) = 1;
  const auto aniso = isotropy_directional_check(exact_stats(lat, m2, 0.1, 1.0));
  CHECK_FALSE(aniso.passed);
  CHECK(aniso.g(1) == 0);
}

TEST_CASE("balances of exact Stokes measures") {
  for (int d : {2, 3}) {
    const auto spec = forced_spec(d, 4);
    const double nu = 0.3;
    const auto entries = balance_checks(stokes_stats(spec, nu), spec, nu);
    int asserted = 0;
    for (const auto& e : entries) {
      if (!e.asserted) continue;
      ++asserted;
      CHECK_MESSAGE(e.passed, e.name);
      CHECK(e.rel_err < 1e-10);
    }
    CHECK(asserted == 2);
  }
}

TEST_CASE("balances and isotropy of a simulated 2D measure") {
  SimulationConfig c;
  c.d = 2;
  c.n = 8;
  c.nu = 0.1;
  c.t_burn = 5;
  c.t_avg = 200;
  c.seed = 3;
  auto t = run_trajectory(c);
  const auto stats = time_average_stats(t);
  const auto spec = make_noise(c);
  for (const auto& e : balance_checks(stats, spec, c.nu, 4.0)) {
    if (e.asserted) CHECK_MESSAGE(e.passed, e.name << " lhs " << e.lhs << " rhs " << e.rhs << " se " << e.std_error);
  }
  CHECK(isotropy_directional_check(stats, 4.0).passed);
  const auto profile = estimate_s2_profile(stats, default_r_grid(spec.lattice(), 16));
  for (const auto& p : profile) {
    CHECK(p.std_error > 0);
    CHECK(p.spread >= 0);
  }
}
