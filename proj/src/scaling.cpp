#include "k41/scaling.hpp"

#include "k41/error.hpp"
#include "k41/spectral.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace k41 {

Field rescale_field(const Field& u, double lambda, double beta) {
  if (!(lambda > 0)) throw ConfigError("lambda", "scale factor must be positive");
  auto lat = std::make_shared<const WaveLattice>(u.lattice().rescaled(lambda));
  return Field(std::move(lat), std::pow(lambda, beta) * u.coeffs());
}

PhysicalParams transform_params(double nu, double L, double amp, double lambda, double beta) {
  if (!(lambda > 0)) throw ConfigError("lambda", "scale factor must be positive");
  return {nu * std::pow(lambda, beta - 1), L / lambda, std::pow(lambda, (1 + 3 * beta) / 2) * amp};
}

std::pair<double, double> map_K(double nu, double r) {
  if (!(nu > 0) || !(r > 0)) throw DomainError("map_K needs positive arguments");
  return {nu * std::pow(r, -4.0 / 3), 1 / r};
}

std::pair<double, double> map_K_inverse(double nu_tilde, double r_tilde) {
  if (!(nu_tilde > 0) || !(r_tilde > 0)) throw DomainError("map_K needs positive arguments");
  return {nu_tilde * std::pow(r_tilde, -4.0 / 3), 1 / r_tilde};
}

MonotoneFunction MonotoneFunction::table(std::vector<double> xs, std::vector<double> ys, const std::string& name) {
  if (xs.size() != ys.size() || xs.size() < 2) throw ConfigError(name, "table needs at least two (x, y) pairs");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0) || !(ys[i] > 0)) throw ConfigError(name, "table entries must be positive");
    if (i > 0 && !(xs[i] > xs[i - 1])) throw ConfigError(name, "table abscissae must be strictly increasing");
  }
  const bool up = ys[1] > ys[0];
  for (std::size_t i = 1; i < ys.size(); ++i) {
    if (up ? !(ys[i] > ys[i - 1]) : !(ys[i] < ys[i - 1])) throw ConfigError(name, "table is not strictly monotone");
  }
  std::vector<double> lx(xs.size()), ly(ys.size());
  std::transform(xs.begin(), xs.end(), lx.begin(), [](double v) { return std::log(v); });
  std::transform(ys.begin(), ys.end(), ly.begin(), [](double v) { return std::log(v); });
  MonotoneFunction out;
  out.lo_ = xs.front();
  out.hi_ = xs.back();
  out.increasing_ = up;
  out.name_ = name;
  out.f_ = [lx = std::move(lx), ly = std::move(ly), xs = std::move(xs), ys = std::move(ys)](double x) {
    if (x == xs.front()) return ys.front();
    if (x == xs.back()) return ys.back();
    const double t = std::log(x);
    const auto it = std::upper_bound(lx.begin(), lx.end(), t);
    const auto j = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - lx.begin(), 1, static_cast<std::ptrdiff_t>(lx.size()) - 1));
    const double w = (t - lx[j - 1]) / (lx[j] - lx[j - 1]);
    return std::exp(ly[j - 1] + w * (ly[j] - ly[j - 1]));
  };
  return out;
}

MonotoneFunction MonotoneFunction::callable(std::function<double(double)> f, double lo, double hi,
                                            const std::string& name) {
  if (!(lo > 0) || !(hi > lo)) throw ConfigError(name, "domain must be an interval of positive numbers");
  constexpr int samples = 257;
  double prev = f(lo);
  if (!(prev > 0) || !std::isfinite(prev)) throw ConfigError(name, "function must be positive and finite");
  int sign = 0;
  for (int i = 1; i < samples; ++i) {
    const double x = lo * std::pow(hi / lo, static_cast<double>(i) / (samples - 1));
    const double y = f(i == samples - 1 ? hi : x);
    if (!(y > 0) || !std::isfinite(y)) throw ConfigError(name, "function must be positive and finite");
    const int s = y > prev ? 1 : (y < prev ? -1 : 0);
    if (s == 0 || (sign != 0 && s != sign)) throw ConfigError(name, "function is not strictly monotone");
    sign = s;
    prev = y;
  }
  MonotoneFunction out;
  out.f_ = std::move(f);
  out.lo_ = lo;
  out.hi_ = hi;
  out.increasing_ = sign > 0;
  out.name_ = name;
  return out;
}

double MonotoneFunction::operator()(double x) const {
  if (!contains(x)) throw DomainError(name_ + ": argument outside the tabulated domain");
  return f_(x);
}

std::pair<double, double> MonotoneFunction::range() const {
  const double a = f_(lo_), b = f_(hi_);
  return {std::min(a, b), std::max(a, b)};
}

double MonotoneFunction::inverse(double y) const {
  const double a = f_(lo_), b = f_(hi_);
  const auto [ymin, ymax] = std::minmax(a, b);
  const double slack = 1e-13 * ymax;
  if (!(y >= ymin - slack && y <= ymax + slack)) throw DomainError(name_ + ": value outside the range");
  if (y <= ymin) return increasing_ ? lo_ : hi_;
  if (y >= ymax) return increasing_ ? hi_ : lo_;
  const double ly = std::log(y);
  auto g = [&](double t) { return std::log(f_(std::clamp(std::exp(t), lo_, hi_))) - ly; };
  boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits - 2);
  std::uintmax_t iters = 200;
  const auto [t0, t1] = boost::math::tools::bisect(g, std::log(lo_), std::log(hi_), tol, iters);
  return std::clamp(std::exp((t0 + t1) / 2), lo_, hi_);
}

void validate(const AdmissibleRegion& region) {
  if (!(region.nu0 > 0)) throw ConfigError("nu0", "threshold viscosity must be positive");
  const auto& f = region.Rtilde0;
  if (f.increasing()) throw ConfigError("Rtilde0", "must be strictly decreasing");
  if (f.hi() < region.nu0) throw ConfigError("Rtilde0", "must be defined up to the threshold viscosity");
  if (f(region.nu0) < 1 - 1e-12) throw ConfigError("Rtilde0", "must be at least 1");
}

void validate(const K41Window& window) {
  if (!(window.c0 > 0)) throw ConfigError("C0", "must be positive");
  if (!(window.nu0 > 0)) throw ConfigError("nu0", "threshold viscosity must be positive");
  if (window.R0.increasing()) throw ConfigError("R0", "must be strictly decreasing");
  if (window.R0.hi() < window.nu0) throw ConfigError("R0", "must be defined up to the threshold viscosity");
}

K41Window derive_window(const AdmissibleRegion& region) {
  validate(region);
  const auto rt = region.Rtilde0;
  const double lo = rt.lo();
  const double top = region.nu0;
  const auto F = MonotoneFunction::callable([rt](double x) { return std::pow(x, -0.75) * rt(x); }, lo, top, "F");
  K41Window w;
  w.c0 = std::pow(top, -0.75);
  w.nu0 = std::pow(F(top), -4.0 / 3);
  const double nu_lo = std::pow(F(lo), -4.0 / 3);
  w.R0 = MonotoneFunction::callable([F](double x) { return std::pow(F.inverse(std::pow(x, -0.75)), -0.75); }, nu_lo,
                                    w.nu0, "R0");
  return w;
}

DerivedRegion derive_region(const K41Window& window) {
  validate(window);
  const auto r0 = window.R0;
  const double lo = r0.lo();
  const double top = window.nu0;
  const auto G = MonotoneFunction::callable([r0](double x) { return std::pow(r0(x), -4.0 / 3); }, lo, top, "G");
  DerivedRegion out;
  out.nu0_unshrunk = std::pow(window.c0, -4.0 / 3);
  double nu0 = std::min(out.nu0_unshrunk, G(top));
  const double x_lo = G(lo);
  if (!(nu0 > x_lo)) throw ConfigError("R0", "derived region is empty on the tabulated domain");
  auto rt = [G](double x) { return std::pow(x / G.inverse(x), 0.75); };
  if (rt(nu0) < 1) {
    // R̃₀ decreases, so it crosses 1 once.
    auto g = [&](double t) { return std::log(rt(std::clamp(std::exp(t), x_lo, nu0))); };
    boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits - 2);
    std::uintmax_t iters = 200;
    if (g(std::log(x_lo)) < 0) throw ConfigError("R0", "derived R̃₀ is below 1 on the whole domain");
    const auto [t0, t1] = boost::math::tools::bisect(g, std::log(x_lo), std::log(nu0), tol, iters);
    nu0 = std::exp(t0);
  }
  out.shrunk = nu0 < out.nu0_unshrunk;
  out.region.nu0 = nu0;
  out.region.Rtilde0 = MonotoneFunction::callable(rt, x_lo, nu0, "Rtilde0");
  out.c0_effective = std::pow(nu0, -0.75);
  return out;
}

Membership window_membership(const K41Window& window, double nu, double r) {
  if (!(nu > 0) || !(r > 0)) return Membership::indeterminate;
  if (nu > window.nu0) return Membership::outside;
  const double s = r * std::pow(nu, -0.75);
  if (s < window.c0) return Membership::outside;
  if (!window.R0.contains(nu)) return Membership::indeterminate;
  return s <= window.R0(nu) ? Membership::inside : Membership::outside;
}

Membership region_membership(const AdmissibleRegion& region, double nu_tilde, double r_tilde) {
  if (!(nu_tilde > 0) || !(r_tilde > 0)) return Membership::indeterminate;
  if (nu_tilde > region.nu0) return Membership::outside;
  if (!region.Rtilde0.contains(nu_tilde)) return Membership::indeterminate;
  return r_tilde >= region.Rtilde0(nu_tilde) ? Membership::inside : Membership::outside;
}

Membership domain_membership(const DomainSpec& spec, Domain which, double x, double y) {
  return which == Domain::k41_window ? window_membership(spec.window, x, y) : region_membership(spec.region, x, y);
}

ScaleVerifyResult pathwise_scaling_verify(const SimulationConfig& config, double lambda, double beta,
                                          const ScaleVerifyOptions& options) {
  if (config.stepper != Stepper::euler_maruyama) {
    throw UnsupportedError("pathwise scaling holds exactly only for euler_maruyama");
  }
  if (!(lambda > 0)) throw ConfigError("lambda", "scale factor must be positive");
  if (options.steps < 1) throw ConfigError("steps", "must be at least 1");
  validate(config);

  const NoiseSpec noise = make_noise(config);
  SimulationConfig c = config;
  c.dt = config.dt > 0 ? config.dt : default_dt(config, noise);
  Trajectory u(c, noise);

  const auto p = transform_params(c.nu, c.L, c.amp, lambda, beta);
  SimulationConfig ct = c;
  ct.nu = p.nu;
  ct.L = p.L;
  ct.amp = p.amp;
  ct.dt = c.dt * std::pow(lambda, -(1 + beta));
  auto lattice_t = std::make_shared<const WaveLattice>(noise.lattice().rescaled(lambda));
  Trajectory ut(ct, noise.relabeled(lattice_t, p.amp));

  if (options.initial == InitialField::random) {
    CounterRng rng(config.seed, 0x696e6974u, config.trajectory);
    Field u0 = random_field(noise.lattice_ptr(), rng, 2.0);
    u0 *= options.initial_scale;
    ut.set_state(rescale_field(u0, lambda, beta));
    u.set_state(std::move(u0));
  }

  const double noise_factor = std::pow(lambda, -(1 + beta) / 2);
  ScaleVerifyResult out;
  out.lambda = lambda;
  out.beta = beta;
  out.dt = c.dt;
  out.dt_tilde = ct.dt;
  out.original = {c.nu, c.L, c.amp};
  out.rescaled = p;
  const double scale = std::pow(lambda, beta);
  for (std::int64_t s = 0; s < options.steps; ++s) {
    const Increments db = u.increments(s);
    u.advance(db);
    ut.advance(Increments(noise_factor * db));
    const double ref = scale * u.state().coeffs().cwiseAbs().maxCoeff();
    if (ref == 0) continue;
    const double diff = (ut.state().coeffs() - scale * u.state().coeffs()).cwiseAbs().maxCoeff();
    out.max_discrepancy = std::max(out.max_discrepancy, diff / ref);
  }
  out.steps = options.steps;
  return out;
}

}  // namespace k41
