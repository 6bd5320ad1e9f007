#include "k41/simulation.hpp"

#include "k41/error.hpp"
#include "k41/spectral.hpp"
#include "k41/stretching.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numbers>

namespace k41 {

Stepper parse_stepper(const std::string& name) {
  if (name == "euler_maruyama") return Stepper::euler_maruyama;
  if (name == "exponential_euler") return Stepper::exponential_euler;
  throw ConfigError("stepper", "expected euler_maruyama or exponential_euler, got " + name);
}

std::string to_string(Stepper s) { return s == Stepper::euler_maruyama ? "euler_maruyama" : "exponential_euler"; }

void validate(const SimulationConfig& c) {
  if (c.d != 2 && c.d != 3) throw ConfigError("d", "dimension must be 2 or 3");
  if (!(c.L > 0) || !std::isfinite(c.L)) throw ConfigError("L", "must be positive");
  if (c.n < 1) throw ConfigError("n", "must be at least 1");
  if (!(c.nu > 0) || !std::isfinite(c.nu)) throw ConfigError("nu", "must be positive");
  if (!(c.amp >= 0) || !std::isfinite(c.amp)) throw ConfigError("amp", "must be nonnegative");
  if (!(c.forcing_kf > 0)) throw ConfigError("forcing_kf", "must be positive");
  if (!(c.forcing_intensity >= 0)) throw ConfigError("forcing_intensity", "must be nonnegative");
  if (!(c.dt >= 0) || !std::isfinite(c.dt)) throw ConfigError("dt", "must be positive (or 0 for the default)");
  if (!(c.t_burn >= 0)) throw ConfigError("t_burn", "must be nonnegative");
  if (!(c.t_avg > 0)) throw ConfigError("t_avg", "must be positive");
  if (c.batches < 2) throw ConfigError("batches", "must be at least 2");
  if (c.sample_every < 1) throw ConfigError("sample_every", "must be at least 1");
  if (c.stretch_every < 1) throw ConfigError("stretch_every", "must be at least 1");
  if (c.stretch_l2_every < 1) throw ConfigError("stretch_l2_every", "must be at least 1");
  if (c.stepper == Stepper::euler_maruyama && c.dt > 0) {
    const double kmax = 2 * std::numbers::pi * c.n / c.L;
    if (c.dt * c.nu * kmax * kmax > 2) {
      throw ConfigError("dt", "euler_maruyama needs dt·ν·(2πn/L)² <= 2");
    }
  }
}

NoiseSpec make_noise(const SimulationConfig& c) {
  auto lattice = build_lattice(c.d, c.L, c.n);
  const double unit = lattice->unit();
  return make_isotropic_spec(lattice, shell_profile(unit, c.forcing_kf, c.forcing_intensity), c.seed, c.amp);
}

double default_dt(const SimulationConfig& c, const NoiseSpec& noise) {
  const auto& lat = noise.lattice();
  double energy = 0;
  for (Index h = 0; h < lat.half_size(); ++h) {
    energy += 2 * noise.amp() * noise.amp() * noise.half_sigma_sq()(h) / (2 * c.nu * lat.half_k2()(h));
  }
  const double kmax = lat.unit() * lat.truncation();
  const double viscous = c.stepper == Stepper::euler_maruyama ? c.nu * kmax * kmax : 0.0;
  const double rate = viscous + kmax * std::sqrt(energy);
  if (!(rate > 0)) return 0.1 / (c.nu * kmax * kmax);
  return 0.1 / rate;
}

namespace {

/// (1 − e^{−z})/z, accurate for small z.
double phi1(double z) { return z < 1e-300 ? 1.0 : -std::expm1(-z) / z; }

}  // namespace

StepKernel::StepKernel(const SimulationConfig& c, const NoiseSpec& noise, double dt)
    : linear_(c.linear), dt_(dt) {
  if (!(dt > 0)) throw ConfigError("dt", "must be positive");
  const auto& lat = noise.lattice();
  const Index half = lat.half_size();
  decay_.resize(half);
  drift_.resize(half);
  shaping_.resize(half);
  for (Index h = 0; h < half; ++h) {
    const double z = c.nu * lat.half_k2()(h) * dt;
    if (c.stepper == Stepper::euler_maruyama) {
      decay_(h) = 1 - z;
      drift_(h) = dt;
      shaping_(h) = 1;
    } else {
      decay_(h) = std::exp(-z);
      drift_(h) = dt * phi1(z);
      shaping_(h) = std::sqrt(phi1(2 * z));
    }
  }
  if (noise.amp() > 0 && noise.sigma_sq_sum() > 0) {
    forcing_.resize(static_cast<std::size_t>(half));
    for (Index h = 0; h < half; ++h) forcing_[static_cast<std::size_t>(h)] = noise.amp() * noise.half_sigma(h);
  }
}

void StepKernel::apply(Field& u, const Field& b, const Increments& db) const {
  auto& c = u.coeffs();
  const Index half = c.cols();
  for (Index h = 0; h < half; ++h) {
    c.col(h) *= decay_(h);
    if (!linear_) c.col(h) -= drift_(h) * b.coeffs().col(h);
    if (!forcing_.empty()) c.col(h) += shaping_(h) * (forcing_[static_cast<std::size_t>(h)] * db.col(h));
  }
}

Field step(const Field& u, const SimulationConfig& c, const NoiseSpec& noise, const Increments& db) {
  const double dt = c.dt > 0 ? c.dt : default_dt(c, noise);
  StepKernel kernel(c, noise, dt);
  Field b(u.lattice_ptr());
  if (!c.linear) b = nonlinear_term(u, c.nonlinearity);
  Field out = u;
  kernel.apply(out, b, db);
  return out;
}

Trajectory::Trajectory(const SimulationConfig& c) : Trajectory(c, make_noise(c)) {}

Trajectory::Trajectory(const SimulationConfig& c, NoiseSpec noise)
    : config_(c),
      noise_(std::move(noise)),
      kernel_((validate(c), c), noise_, c.dt > 0 ? c.dt : default_dt(c, noise_)),
      op_(noise_.lattice_ptr(), c.nonlinearity),
      u_(noise_.lattice_ptr()),
      b_(noise_.lattice_ptr()) {
  config_.dt = kernel_.dt();
}

std::int64_t Trajectory::burn_steps() const { return std::llround(config_.t_burn / dt()); }

std::int64_t Trajectory::average_steps() const { return std::max<std::int64_t>(1, std::llround(config_.t_avg / dt())); }

void Trajectory::set_state(Field u) {
  if (!(u.lattice() == noise_.lattice())) throw ConfigError("state", "field lattice differs from the trajectory's");
  u_ = std::move(u);
}

Increments Trajectory::increments(std::int64_t index) const {
  CounterRng rng(config_.seed, config_.trajectory, static_cast<std::uint32_t>(index));
  return sample_brownian(noise_.lattice(), dt(), rng);
}

void Trajectory::advance() { advance(increments(steps_)); }

void Trajectory::advance(const Increments& db) {
  if (!config_.linear) op_.apply(u_, b_);
  kernel_.apply(u_, b_, db);
  const auto& c = u_.coeffs();
  const bool bad = !c.allFinite() || (c.size() > 0 && c.cwiseAbs().maxCoeff() > 1e100);
  if (bad) throw NumericalBlowup(steps_);
  ++steps_;
  if (on_step) on_step(*this);
}

void Trajectory::advance(std::int64_t steps) {
  for (std::int64_t i = 0; i < steps; ++i) advance();
}

void Trajectory::burn_in() {
  const std::int64_t target = burn_steps();
  while (steps_ < target) advance();
}

Trajectory run_trajectory(const SimulationConfig& c) {
  Trajectory t(c);
  t.burn_in();
  return t;
}

EnsembleStats time_average_stats(Trajectory& t) {
  const auto& c = t.config();
  const auto& lat = t.noise().lattice();
  const Index half = lat.half_size();
  const std::int64_t steps = t.average_steps();
  const std::int64_t planned = steps / c.sample_every;
  if (planned < c.batches) throw ConfigError("t_avg", "averaging window holds fewer samples than batches");

  const bool three = lat.dim() == 3;
  const std::int64_t planned_mean = three ? (planned + c.stretch_every - 1) / c.stretch_every : 0;
  const std::int64_t planned_l2 = three ? (planned + c.stretch_l2_every - 1) / c.stretch_l2_every : 0;

  BatchAccumulator modes(half, c.batches, planned);
  BatchAccumulator scalars(4, c.batches, planned);
  std::unique_ptr<BatchAccumulator> stretch_mean, stretch_l2;
  std::unique_ptr<StretchingEvaluator<double>> eval_mean, eval_l2;
  if (three && planned_mean >= 2) {
    stretch_mean = std::make_unique<BatchAccumulator>(1, static_cast<int>(std::min<std::int64_t>(c.batches, planned_mean)), planned_mean);
    eval_mean = std::make_unique<StretchingEvaluator<double>>(lat, false);
  }
  if (three && planned_l2 >= 2) {
    stretch_l2 = std::make_unique<BatchAccumulator>(1, static_cast<int>(std::min<std::int64_t>(c.batches, planned_l2)), planned_l2);
    eval_l2 = std::make_unique<StretchingEvaluator<double>>(lat, true);
  }

  Eigen::VectorXd m2(half), sc(4), one(1);
  std::int64_t sample = 0;
  int reported = 0;
  for (std::int64_t s = 1; s <= steps; ++s) {
    t.advance();
    if (s % c.sample_every != 0 || sample >= planned) continue;
    const auto& u = t.state();
    for (Index h = 0; h < half; ++h) m2(h) = u.coeffs().col(h).squaredNorm();
    modes.add(sample, m2);
    const auto norms = field_norms(u);
    sc << norms.energy, norms.grad_sq, norms.hess_sq, norms.curl_grad_sq;
    scalars.add(sample, sc);
    if (stretch_mean && sample % c.stretch_every == 0) {
      one(0) = (*eval_mean)(u).mean_stretch;
      stretch_mean->add(sample / c.stretch_every, one);
    }
    if (stretch_l2 && sample % c.stretch_l2_every == 0) {
      one(0) = (*eval_l2)(u).stretch_l2_sq;
      stretch_l2->add(sample / c.stretch_l2_every, one);
    }
    ++sample;
    if (c.progress && sample * 10 / planned > reported) {
      reported = static_cast<int>(sample * 10 / planned);
      std::fprintf(stderr, "k41: averaging %d%% (t = %.6g)\n", reported * 10, t.time());
    }
  }

  EnsembleStats out;
  out.lattice = t.noise().lattice_ptr();
  out.nu = c.nu;
  out.length = c.L;
  out.amp = c.amp;
  out.samples = modes.count();
  out.mode_m2 = modes.mean();
  out.mode_m2_batches = modes.batch_means();
  out.mode_m2_stderr = modes.std_error();

  const Eigen::VectorXd means = scalars.mean();
  const Eigen::MatrixXd bm = scalars.batch_means();
  const Eigen::VectorXd se = scalars.std_error();
  auto moment = [&](int i) {
    Moment m;
    m.mean = means(i);
    m.std_error = se(i);
    m.samples = scalars.count();
    m.batches = bm.row(i).transpose();
    return m;
  };
  out.energy = moment(0);
  out.grad_sq = moment(1);
  out.hess_sq = moment(2);
  out.curl_grad_sq = moment(3);

  auto single = [](const BatchAccumulator* acc) {
    Moment m;
    if (acc == nullptr) {
      m.mean = std::numeric_limits<double>::quiet_NaN();
      return m;
    }
    m.mean = acc->mean()(0);
    m.std_error = acc->std_error()(0);
    m.samples = acc->count();
    m.batches = acc->batch_means().row(0).transpose();
    return m;
  };
  if (three) {
    out.mean_stretch = single(stretch_mean.get());
    out.stretch_l2_sq = single(stretch_l2.get());
  } else {
    out.mean_stretch = Moment::exact(0);
    out.stretch_l2_sq = Moment::exact(0);
  }
  return out;
}

EnsembleStats field_stats(const Field& u, double nu, double amp) {
  const auto& lat = u.lattice();
  Eigen::VectorXd m2(lat.half_size());
  for (Index h = 0; h < lat.half_size(); ++h) m2(h) = u.coeffs().col(h).squaredNorm();
  EnsembleStats s = exact_stats(u.lattice_ptr(), m2, nu, amp);
  s.samples = 1;
  const auto norms = field_norms(u);
  s.curl_grad_sq = Moment::exact(norms.curl_grad_sq);
  if (lat.dim() == 3) {
    const auto st = stretching_integrals(u);
    s.mean_stretch = Moment::exact(st.mean_stretch);
    s.stretch_l2_sq = Moment::exact(st.stretch_l2_sq);
  }
  return s;
}

}  // namespace k41
