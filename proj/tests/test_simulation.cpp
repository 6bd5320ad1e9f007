#include <doctest.h>

#include "k41/error.hpp"
#include "k41/noise.hpp"
#include "k41/simulation.hpp"
#include "k41/spectral.hpp"
#include "k41/stokes.hpp"

#include <cmath>

using namespace k41;

namespace {

SimulationConfig tiny(int d, int n) {
  SimulationConfig c;
  c.d = d;
  c.n = n;
  c.nu = 0.5;
  c.dt = 1e-3;
  c.t_burn = 0;
  c.t_avg = 0.05;
  c.batches = 5;
  return c;
}

}  // namespace

TEST_CASE("isotropic shell noise satisfies the noise assumptions") {
  for (int d : {2, 3}) {
    auto lat = build_lattice(d, 1.0, 4);
    const auto spec = make_isotropic_spec(lat, shell_profile(lat->unit(), 2.0, 1.5), 17, 0.7);
    const auto report = validate_spec(spec);
    CHECK(report.passed());
    CHECK(report.check("incompressibility").passed);
    CHECK(report.check("isotropy").passed);
    for (Index h = 0; h < lat->half_size(); ++h) {
      const double m2 = lat->half_modes().col(h).squaredNorm();
      const double expect = m2 <= 4 ? 1.5 * 1.5 * (d - 1) : 0.0;
      CHECK(spec.half_sigma_sq()(h) == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(spec.amp() == 0.7);
    CHECK_THROWS_AS(validate_spec(spec).check("nonexistent"), ConfigError);
  }
}

TEST_CASE("anisotropic noise fails the isotropy check") {
  auto lat = build_lattice(2, 1.0, 2);
  std::vector<Eigen::MatrixXcd> sigma(static_cast<std::size_t>(lat->size()), Eigen::MatrixXcd::Zero(2, 2));
  const Eigen::Vector2i m(1, 0);
  const Index i = lat->find(m), j = lat->negation(i);
  sigma[static_cast<std::size_t>(i)](1, 1) = 1.0;
  sigma[static_cast<std::size_t>(j)](1, 1) = 1.0;
  const NoiseSpec spec(lat, sigma, 1.0);
  const auto report = validate_spec(spec);
  CHECK(report.check("incompressibility").passed);
  CHECK(report.check("reality").passed);
  CHECK_FALSE(report.check("isotropy").passed);
  CHECK(spec.support() == 2);
}

TEST_CASE("brownian increments have the documented variance") {
  auto lat = build_lattice(3, 1.0, 3);
  CounterRng rng(4, 2, 0);
  const double dt = 0.01;
  double re2 = 0, im2 = 0;
  Index count = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto db = sample_brownian(*lat, dt, rng);
    re2 += db.real().squaredNorm();
    im2 += db.imag().squaredNorm();
    count += db.size();
  }
  const double tol = 4 * std::sqrt(2.0 / count);
  CHECK(std::abs(re2 / count / (dt / 2) - 1) < tol);
  CHECK(std::abs(im2 / count / (dt / 2) - 1) < tol);
}

TEST_CASE("brownian path rescaling") {
  auto lat = build_lattice(2, 1.0, 2);
  CounterRng rng(1, 0, 0);
  BrownianPath path{lat, 0.01, {sample_brownian(*lat, 0.01, rng)}};
  const auto out = rescale_brownian_path(path, 2.0, -1.0 / 3);
  CHECK(out.lattice->length() == doctest::Approx(0.5));
  CHECK(out.dt == doctest::Approx(0.01 * std::pow(2.0, -2.0 / 3)));
  CHECK((out.steps[0] - std::pow(2.0, -1.0 / 3) * path.steps[0]).norm() < 1e-15);
  CHECK_THROWS_AS(rescale_brownian_path(path, 2.0, 0.0, WaveLattice(2, 1.0, 2)), ConfigError);
}

TEST_CASE("stokes mode moment") {
  CHECK(stokes_mode_moment(4.0, 2.0, 0.5, 1.0) == doctest::Approx(0.5));
  CHECK(stokes_mode_moment(1.0, 1.0, 0.25, 2.0) == doctest::Approx(8.0));
  CHECK_THROWS_AS(stokes_mode_moment(1.0, 1.0, 0.0, 1.0), DomainError);
  auto lat = build_lattice(2, 1.0, 3);
  const auto spec = make_isotropic_spec(lat, shell_profile(lat->unit(), 1.5), 3);
  const StokesSummary s(spec, 0.1);
  CHECK(s.epsilon() == doctest::Approx(0.1 * s.stats().grad_sq.mean).epsilon(1e-12));
  CHECK(s.theta_diss() ==
        doctest::Approx(std::sqrt(s.stats().grad_sq.mean / s.stats().hess_sq.mean)).epsilon(1e-12));
  // θ is independent of ν for the Stokes system.
  CHECK(StokesSummary(spec, 0.01).theta_diss() == doctest::Approx(s.theta_diss()).epsilon(1e-14));
  const auto empty = make_isotropic_spec(lat, [](double) { return 0.0; }, 3);
  CHECK_THROWS_AS(StokesSummary(empty, 0.1), DegenerateMeasure);
}

TEST_CASE("euler maruyama step formula") {
  auto c = tiny(2, 3);
  c.stepper = Stepper::euler_maruyama;
  const auto noise = make_noise(c);
  CounterRng rng(5, 0, 0);
  const Field u = random_field(noise.lattice_ptr(), rng);
  const auto db = sample_brownian(noise.lattice(), c.dt, rng);
  const Field got = step(u, c, noise, db);
  Field expect = u;
  const Field b = nonlinear_term(u, c.nonlinearity);
  for (Index h = 0; h < u.lattice().half_size(); ++h) {
    const double k2 = u.lattice().half_k2()(h);
    expect.coeffs().col(h) += c.dt * (-c.nu * k2 * u.coeffs().col(h) - b.coeffs().col(h)) +
                              c.amp * noise.half_sigma(h) * db.col(h);
  }
  CHECK((got.coeffs() - expect.coeffs()).norm() < 1e-13 * expect.coeffs().norm());
}

TEST_CASE("exponential euler is exact for the linear system") {
  auto c = tiny(2, 3);
  c.linear = true;
  c.dt = 0.3;
  const auto noise = make_noise(c);
  CounterRng rng(6, 0, 0);
  const Field u = random_field(noise.lattice_ptr(), rng);
  Increments zero = Increments::Zero(2, u.lattice().half_size());
  const Field got = step(u, c, noise, zero);
  for (Index h = 0; h < u.lattice().half_size(); ++h) {
    const double decay = std::exp(-c.nu * u.lattice().half_k2()(h) * c.dt);
    CHECK((got.coeffs().col(h) - decay * u.coeffs().col(h)).norm() < 1e-14);
  }
}

TEST_CASE("trajectories are keyed by seed and trajectory index") {
  auto c = tiny(2, 4);
  Trajectory a(c), b(c);
  a.advance(20);
  b.advance(20);
  CHECK(a.state().coeffs() == b.state().coeffs());
  c.trajectory = 1;
  Trajectory other(c);
  other.advance(20);
  CHECK(other.state().coeffs() != a.state().coeffs());
  CHECK(a.increments(3) == b.increments(3));
  CHECK(a.time() == doctest::Approx(20 * c.dt));
}

TEST_CASE("configuration errors name their key") {
  auto c = tiny(2, 4);
  c.nu = -1;
  try {
    validate(c);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "nu");
  }
  c = tiny(2, 8);
  c.stepper = Stepper::euler_maruyama;
  c.dt = 1.0;
  try {
    Trajectory t(c);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "dt");
  }
}

TEST_CASE("unstable step sizes raise a blowup") {
  auto c = tiny(2, 8);
  c.stepper = Stepper::euler_maruyama;
  c.nu = 1e-3;
  c.amp = 50;
  c.dt = 0.5;
  Trajectory t(c);
  CHECK_THROWS_AS(t.advance(2000), NumericalBlowup);
}

TEST_CASE("default step size") {
  auto c = tiny(2, 8);
  c.dt = 0;
  const auto noise = make_noise(c);
  const double dt = default_dt(c, noise);
  CHECK(dt > 0);
  c.stepper = Stepper::euler_maruyama;
  const double dt_em = default_dt(c, noise);
  CHECK(dt_em < dt);
  const double kmax = noise.lattice().unit() * 8;
  CHECK(dt_em * c.nu * kmax * kmax <= 0.1);
}

TEST_CASE("linear time averages match the stokes oracle") {
  SimulationConfig c;
  c.d = 2;
  c.n = 4;
  c.nu = 0.5;
  c.linear = true;
  c.dt = 0.05;
  c.t_burn = 2;
  c.t_avg = 400;
  c.forcing_kf = 2;
  auto t = run_trajectory(c);
  const auto stats = time_average_stats(t);
  const auto exact = stokes_stats(t.noise(), c.nu);
  int outside = 0, forced = 0;
  for (Index h = 0; h < stats.mode_m2.size(); ++h) {
    if (exact.mode_m2(h) == 0) {
      CHECK(stats.mode_m2(h) == 0.0);
      continue;
    }
    ++forced;
    if (std::abs(stats.mode_m2(h) - exact.mode_m2(h)) > 3 * stats.mode_m2_stderr(h)) ++outside;
  }
  // At 3σ about 0.3% of modes fall outside by chance.
  CHECK(outside <= 1);
  CHECK(forced > 0);
  CHECK(std::abs(c.nu * stats.grad_sq.mean - 0.5 * c.amp * c.amp * t.noise().sigma_sq_sum()) <
        3 * c.nu * stats.grad_sq.std_error);
}
