#include <doctest.h>

#include "k41/error.hpp"
#include "k41/noise.hpp"
#include "k41/scaling.hpp"
#include "k41/spectral.hpp"

#include <cmath>
#include <random>

using namespace k41;

TEST_CASE("rescale field: identity, group law and pointwise contract") {
  auto lat = build_lattice(3, 1.0, 3);
  CounterRng rng(1, 0, 0);
  const Field u = random_field(lat, rng);
  const Field same = rescale_field(u, 1.0, 0.7);
  CHECK(same.coeffs() == u.coeffs());
  CHECK(same.lattice() == u.lattice());

  const Field a = rescale_field(rescale_field(u, 2.0, -0.4), 1.5, -0.4);
  const Field b = rescale_field(u, 3.0, -0.4);
  CHECK(a.lattice().length() == doctest::Approx(b.lattice().length()).epsilon(1e-15));
  CHECK((a.coeffs() - b.coeffs()).norm() < 1e-14 * b.coeffs().norm());

  const double lambda = 2.0, beta = -1.0 / 3;
  const Field v = rescale_field(u, lambda, beta);
  CHECK(v.lattice().length() == doctest::Approx(0.5));
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> unif(0.0, 0.5);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d x(unif(gen), unif(gen), unif(gen));
    const Eigen::VectorXd lhs = evaluate(v, x);
    const Eigen::VectorXd rhs = std::pow(lambda, beta) * evaluate(u, Eigen::Vector3d(lambda * x));
    worst = std::max(worst, (lhs - rhs).norm() / rhs.norm());
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("structure function transport under the K41 rescaling") {
  auto lat = build_lattice(2, 1.0, 5);
  CounterRng rng(2, 0, 0);
  const Field u = random_field(lat, rng);
  for (double r : {0.05, 0.2, 0.7}) {
    const Field v = rescale_field(u, r, -1.0 / 3);
    CHECK(s2_spectral(u, r, 0) == doctest::Approx(std::cbrt(r * r) * s2_spectral(v, 1.0, 0)).epsilon(1e-12));
  }
}

TEST_CASE("parameter transform") {
  const auto id = transform_params(0.3, 2.0, 1.5, 1.0, 0.7);
  CHECK(id.nu == 0.3);
  CHECK(id.L == 2.0);
  CHECK(id.amp == 1.5);
  const auto p = transform_params(0.01, 1.0, 1.0, 0.5, -1.0 / 3);
  CHECK(p.nu == doctest::Approx(0.0251984).epsilon(1e-6));
  CHECK(p.L == doctest::Approx(2.0));
  CHECK(p.amp == doctest::Approx(1.0).epsilon(1e-15));
  // λ = 1/L with β = −1/3 gives ν̃ = νL^{4/3}.
  CHECK(p.nu == doctest::Approx(0.01 * std::pow(2.0, 4.0 / 3)).epsilon(1e-14));
  for (double lambda : {0.1, 3.0, 17.0}) CHECK(transform_params(1, 1, 2.5, lambda, -1.0 / 3).amp == doctest::Approx(2.5));
}

TEST_CASE("map K") {
  const auto [a, b] = map_K(1, 1);
  CHECK(a == 1.0);
  CHECK(b == 1.0);
  const auto [c, d] = map_K(1e-4, 1e-3);
  CHECK(c == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d == doctest::Approx(1e3).epsilon(1e-12));
  const double nu = 3e-5;
  const auto [e, f] = map_K(nu, std::pow(nu, 0.75));
  CHECK(e == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f == doctest::Approx(std::pow(nu, -0.75)).epsilon(1e-12));
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> lg(-8, 3);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const double x = std::pow(10.0, lg(gen)), y = std::pow(10.0, lg(gen));
    const auto [p, q] = map_K(x, y);
    const auto [xx, yy] = map_K_inverse(p, q);
    worst = std::max({worst, std::abs(xx - x) / x, std::abs(yy - y) / y});
  }
  CHECK(worst < 1e-14);
  CHECK_THROWS_AS(map_K(0, 1), DomainError);
}

TEST_CASE("monotone functions") {
  const auto t = MonotoneFunction::table({1, 2, 4}, {8, 4, 1}, "t");
  CHECK_FALSE(t.increasing());
  CHECK(t(2) == doctest::Approx(4));
  CHECK(t(std::sqrt(2.0)) == doctest::Approx(std::sqrt(32.0)));
  CHECK(t.inverse(2) == doctest::Approx(std::sqrt(8.0)));
  CHECK(t.inverse(t(3.3)) == doctest::Approx(3.3).epsilon(1e-13));
  CHECK_THROWS_AS(t(5), DomainError);
  CHECK_THROWS_AS(t.inverse(10), DomainError);
  CHECK_THROWS_AS(MonotoneFunction::table({1, 2, 3}, {1, 3, 2}, "bad"), ConfigError);
  CHECK_THROWS_AS(MonotoneFunction::callable([](double x) { return 2 + std::sin(x); }, 0.1, 10, "bad"), ConfigError);
  const auto c = MonotoneFunction::callable([](double x) { return x * x; }, 1e-3, 10, "sq");
  CHECK(c.increasing());
  CHECK(c.inverse(2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("window functions from the region x^-1") {
  AdmissibleRegion region;
  region.nu0 = 1;
  region.Rtilde0 = MonotoneFunction::callable([](double x) { return 1 / x; }, 1e-12, 1, "Rtilde0");
  const auto w = derive_window(region);
  CHECK(w.c0 == doctest::Approx(1));
  CHECK(w.nu0 == doctest::Approx(1));
  for (double x : {1e-6, 1e-3, 0.1, 0.5}) CHECK(w.R0(x) == doctest::Approx(std::pow(x, -9.0 / 28)).epsilon(1e-10));

  const auto back = derive_region(w);
  CHECK_FALSE(back.shrunk);
  CHECK(back.region.nu0 == doctest::Approx(1));
  for (double x : {1e-3, 0.01, 0.3, 0.9}) CHECK(back.region.Rtilde0(x) == doctest::Approx(1 / x).epsilon(1e-8));
}

TEST_CASE("C0 from the threshold viscosity") {
  AdmissibleRegion region;
  region.nu0 = 16;
  region.Rtilde0 = MonotoneFunction::callable([](double x) { return 32 / x; }, 1e-6, 16, "Rtilde0");
  CHECK(derive_window(region).c0 == doctest::Approx(0.125));
}

TEST_CASE("derived window is decreasing and divergent") {
  AdmissibleRegion region;
  region.nu0 = 0.5;
  region.Rtilde0 = MonotoneFunction::callable([](double x) { return 2 * std::pow(x, -0.5); }, 1e-10, 0.5, "Rtilde0");
  const auto w = derive_window(region);
  CHECK_FALSE(w.R0.increasing());
  CHECK(w.R0(w.R0.lo()) > 100 * w.R0(w.nu0));
}

TEST_CASE("domain membership boundaries") {
  AdmissibleRegion region;
  region.nu0 = 1;
  region.Rtilde0 = MonotoneFunction::callable([](double x) { return 1 / x; }, 1e-12, 1, "Rtilde0");
  DomainSpec spec{region, derive_window(region)};
  CHECK(domain_membership(spec, Domain::condition_a, 1.5, 100) == Membership::outside);
  CHECK(domain_membership(spec, Domain::condition_a, 1e-13, 100) == Membership::indeterminate);
  const double nu = 1e-4;
  const double r = spec.window.c0 * std::pow(nu, 0.75);
  CHECK(domain_membership(spec, Domain::k41_window, nu, r) == Membership::inside);
  CHECK(domain_membership(spec, Domain::k41_window, nu, 0.999 * r) == Membership::outside);
}

TEST_CASE("pathwise scaling") {
  SimulationConfig c;
  c.d = 2;
  c.n = 4;
  c.nu = 0.05;
  c.dt = 1e-3;
  c.stepper = Stepper::euler_maruyama;
  c.nonlinearity = Nonlinearity::direct;
  ScaleVerifyOptions opt;
  opt.steps = 50;
  CHECK(pathwise_scaling_verify(c, 1.0, 0.3, opt).max_discrepancy < 1e-14);
  const auto r = pathwise_scaling_verify(c, 2.0, -1.0 / 3, opt);
  CHECK(r.max_discrepancy < 1e-10);
  CHECK(r.max_discrepancy > 0);
  CHECK(r.dt_tilde == doctest::Approx(c.dt * std::pow(2.0, -2.0 / 3)));

  c.amp = 0;
  opt.initial = InitialField::random;
  opt.initial_scale = 5;
  CHECK(pathwise_scaling_verify(c, 2.0, 0.8, opt).max_discrepancy < 1e-10);

  c.stepper = Stepper::exponential_euler;
  CHECK_THROWS_AS(pathwise_scaling_verify(c, 2.0, 0.8, opt), UnsupportedError);
}
