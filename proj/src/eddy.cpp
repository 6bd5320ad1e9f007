#include "k41/eddy.hpp"

#include "k41/error.hpp"

#include <Eigen/Dense>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

namespace k41 {

namespace {

constexpr double pi = std::numbers::pi;
constexpr int table_intervals = 4096;
constexpr int series_terms = 40;
constexpr double series_radius = 0.1;

double bump_shape(double r) { return r < 1 ? std::exp(-1 / (1 - r * r)) : 0.0; }

}  // namespace

RadialProfile::RadialProfile() {
  using boost::math::quadrature::gauss_kronrod;
  auto shell = [](double s) { return bump_shape(s) * s * s; };
  const double total = gauss_kronrod<double, 61>::integrate(shell, 0.0, 1.0, 15, 1e-15);
  c_ = 1 / (4 * pi * total);

  step_ = 1.0 / table_intervals;
  m_.assign(table_intervals + 1, 0.0);
  for (int i = 1; i <= table_intervals; ++i) {
    const double piece = gauss_kronrod<double, 15>::integrate(shell, (i - 1) * step_, i * step_, 0);
    m_[static_cast<std::size_t>(i)] = m_[static_cast<std::size_t>(i - 1)] + 4 * pi * c_ * piece;
  }
  const double table_end = m_.back();
  for (auto& m : m_) m /= table_end;

  // exp(−t/(1−t)) = Σ a_j t^j from (1−t)²E′ = −E.
  std::vector<double> a(series_terms + 1);
  a[0] = 1;
  a[1] = -1;
  for (int j = 1; j < series_terms; ++j) {
    a[static_cast<std::size_t>(j + 1)] =
        ((2 * j - 1) * a[static_cast<std::size_t>(j)] - (j - 1) * a[static_cast<std::size_t>(j - 1)]) / (j + 1);
  }
  const double ce = c_ * std::exp(-1.0);
  series_g_.resize(series_terms + 1);
  series_h_.resize(series_terms + 1);
  for (int j = 0; j <= series_terms; ++j) {
    const auto js = static_cast<std::size_t>(j);
    series_g_[js] = ce * a[js] / (2 * j + 3);
    series_h_[js] = ce * a[js] * 2 * j / (2 * j + 3);
  }
}

const RadialProfile& RadialProfile::bump() {
  static const RadialProfile instance;
  return instance;
}

double RadialProfile::rho(double r) const { return c_ * bump_shape(r); }

double RadialProfile::rho_prime(double r) const {
  if (r >= 1) return 0;
  const double q = 1 - r * r;
  return rho(r) * (-2 * r / (q * q));
}

double RadialProfile::mass(double r) const {
  if (r <= 0) return 0;
  if (r >= 1) return 1;
  if (r < series_radius) return 4 * pi * r * r * r * radial(r).g;
  const double x = r / step_;
  const auto i = std::min(static_cast<int>(x), table_intervals - 1);
  const double s = x - i;
  const double r0 = i * step_, r1 = (i + 1) * step_;
  const double d0 = 4 * pi * rho(r0) * r0 * r0 * step_;
  const double d1 = 4 * pi * rho(r1) * r1 * r1 * step_;
  const double m0 = m_[static_cast<std::size_t>(i)], m1 = m_[static_cast<std::size_t>(i + 1)];
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * m0 + (s3 - 2 * s2 + s) * d0 + (-2 * s3 + 3 * s2) * m1 + (s3 - s2) * d1;
}

RadialProfile::Radial RadialProfile::radial(double r) const {
  Radial out;
  if (r >= 1) {
    const double r2 = r * r;
    out.g = 1 / (4 * pi * r2 * r);
    out.h = -3 * out.g / r2;
    out.b = -5 * out.h / r2;
    return out;
  }
  if (r < series_radius) {
    const double t = r * r;
    double g = 0, h = 0, b = 0;
    for (int j = series_terms; j >= 0; --j) {
      const auto js = static_cast<std::size_t>(j);
      g = g * t + series_g_[js];
      if (j >= 1) h = h * t + series_h_[js];
      if (j >= 2) b = b * t + 2 * (j - 1) * series_h_[js];
    }
    out.g = g;
    out.h = h;
    out.b = b;
    return out;
  }
  const double m = mass(r);
  const double p = rho(r), dp = rho_prime(r);
  out.g = m / (4 * pi * r * r * r);
  const double dg = (p - 3 * out.g) / r;
  out.h = dg / r;
  const double dh = (dp - 3 * dg) / (r * r) - 2 * out.h / r;
  out.b = dh / r;
  return out;
}

EddyOrder parse_eddy_order(const std::string& name) {
  if (name == "grad") return EddyOrder::grad;
  if (name == "hess") return EddyOrder::hess;
  throw ConfigError("order", "expected grad or hess, got " + name);
}

std::string to_string(EddyOrder o) { return o == EddyOrder::grad ? "grad" : "hess"; }

Vec3 kernel_K(const Vec3& x) {
  const double r = x.norm();
  if (r == 0) return Vec3::Zero();
  return RadialProfile::bump().radial(r).g * x;
}

Mat3 kernel_DK(const Vec3& x) {
  const auto k = RadialProfile::bump().radial(x.norm());
  return k.g * Mat3::Identity() + k.h * x * x.transpose();
}

Tensor3 kernel_D2K(const Vec3& x) {
  const auto k = RadialProfile::bump().radial(x.norm());
  Tensor3 out;
  for (int c = 0; c < 3; ++c) {
    Mat3& t = out[static_cast<std::size_t>(c)];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double sym = (i == j ? x(c) : 0.0) + (i == c ? x(j) : 0.0) + (j == c ? x(i) : 0.0);
        t(i, j) = k.h * sym + k.b * x(i) * x(j) * x(c);
      }
    }
  }
  return out;
}

double kernel_DK_norm_sq(double r) {
  const auto k = RadialProfile::bump().radial(r);
  const double r2 = r * r;
  return 3 * k.g * k.g + 2 * k.g * k.h * r2 + k.h * k.h * r2 * r2;
}

double kernel_D2K_norm_sq(double r) {
  const auto k = RadialProfile::bump().radial(r);
  const double r2 = r * r;
  return 15 * k.h * k.h * r2 + 6 * k.h * k.b * r2 * r2 + k.b * k.b * r2 * r2 * r2;
}

void validate(const EddyConfig& c) {
  if (!(c.eta > 0 && c.eta < 1)) throw ConfigError("eta", "UV cutoff must lie in (0, 1)");
  if (c.samples < 1) throw ConfigError("samples", "must be positive");
  if (c.steps < 100) throw ConfigError("steps", "path discretization needs at least 100 steps");
  if (!(c.r_max > 0)) throw ConfigError("r_max", "must be positive");
  if (c.threads < 1) throw ConfigError("threads", "must be at least 1");
}

double ell_normalization(double eta) { return (std::pow(eta, -3.0) - 1) / 3; }

double sample_ell(double eta, double u) {
  const double top = std::pow(eta, -3.0);
  return std::pow(top - u * (top - 1), -1.0 / 3);
}

double sample_start(double scale, double r_max, CounterRng& rng, Vec3& x0) {
  const double s_max = r_max / (1 + r_max);
  const double s = s_max * std::cbrt(rng.uniform());
  const double R = s / (1 - s);
  const double z = 2 * rng.uniform() - 1;
  const double phi = 2 * pi * rng.uniform();
  const double rho = std::sqrt(std::max(0.0, 1 - z * z));
  x0 = scale * R * Vec3(rho * std::cos(phi), rho * std::sin(phi), z);
  const double q = s_max * s_max * s_max / 3;
  const double w = 1 + R;
  return 4 * pi * q * scale * scale * scale * w * w * w * w;
}

FilamentDraw sample_filament(double ell, const EddyConfig& config, CounterRng& rng) {
  if (!(ell > config.eta && ell < 1)) throw DomainError("filament thickness must lie in (eta, 1)");
  FilamentDraw d;
  d.ell = ell;
  d.U = std::cbrt(ell);
  d.T = ell * ell;
  d.weight = ell_normalization(config.eta) * sample_start(ell, config.r_max, rng, d.x0);
  const double sd = std::sqrt(d.T / config.steps);
  d.path.resize(static_cast<std::size_t>(config.steps) + 1);
  d.path[0] = d.x0;
  for (int i = 1; i <= config.steps; ++i) {
    const auto [a, b] = rng.normal_pair();
    const Vec3 step(a, b, rng.normal());
    d.path[static_cast<std::size_t>(i)] = d.path[static_cast<std::size_t>(i - 1)] + sd * step;
  }
  return d;
}

namespace {

double path_integrand(double r_scaled, EddyOrder order, double ell) {
  return order == EddyOrder::grad ? kernel_DK_norm_sq(r_scaled) : kernel_D2K_norm_sq(r_scaled) / (ell * ell);
}

/// Mean, M2 and Σv² of a block of draws, combined in a fixed order.
struct Summary {
  std::int64_t n = 0;
  double mean = 0, m2 = 0, sum_sq = 0;

  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
    sum_sq += v * v;
  }

  void merge(const Summary& o) {
    if (o.n == 0) return;
    const double total = static_cast<double>(n + o.n);
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.n) / total;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / total;
    n += o.n;
    sum_sq += o.sum_sq;
  }
};

constexpr std::int64_t block_size = 1024;

/// Runs draw(i) for i < count on `threads` workers; the reduction tree is independent of the worker count.
template <typename Draw>
Estimate run_draws(std::int64_t count, int threads, const Draw& draw) {
  const std::int64_t blocks = (count + block_size - 1) / block_size;
  std::vector<Summary> parts(static_cast<std::size_t>(blocks));
  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    for (std::int64_t b = next++; b < blocks; b = next++) {
      Summary s;
      const std::int64_t end = std::min(count, (b + 1) * block_size);
      for (std::int64_t i = b * block_size; i < end; ++i) s.add(draw(i));
      parts[static_cast<std::size_t>(b)] = s;
    }
  };
  const int n = static_cast<int>(std::max<std::int64_t>(1, std::min<std::int64_t>(threads, blocks)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  Summary total;
  for (const auto& p : parts) total.merge(p);
  Estimate e;
  e.samples = total.n;
  e.value = total.mean;
  e.std_error = total.n > 1 ? std::sqrt(total.m2 / static_cast<double>(total.n - 1) / static_cast<double>(total.n)) : 0.0;
  const double sum = total.mean * static_cast<double>(total.n);
  e.effective_samples = total.sum_sq > 0 ? sum * sum / total.sum_sq : 0.0;
  e.low_statistics = e.effective_samples < 100;
  return e;
}

/// Trapezoid over a Brownian path from x0/ℓ with per-step variance 1/N in units of ℓ.
double unit_path_integral(const Vec3& z0, int steps, EddyOrder order, double ell, CounterRng& rng) {
  const double sd = std::sqrt(1.0 / steps);
  Vec3 z = z0;
  double sum = 0.5 * path_integrand(z.norm(), order, ell);
  for (int i = 1; i <= steps; ++i) {
    const auto [a, b] = rng.normal_pair();
    z += sd * Vec3(a, b, rng.normal());
    sum += (i == steps ? 0.5 : 1.0) * path_integrand(z.norm(), order, ell);
  }
  return sum / steps;
}

constexpr std::uint32_t purpose_moment = 0x65646479u;
constexpr std::uint32_t purpose_canonical = 0x63616e6fu;
constexpr std::uint32_t purpose_occupation = 0x6f636375u;

}  // namespace

double filament_contribution(const FilamentDraw& draw, EddyOrder order) {
  const std::size_t n = draw.path.size();
  if (n < 2) throw ConfigError("steps", "path needs at least one step");
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = path_integrand(draw.path[i].norm() / draw.ell, order, draw.ell);
    sum += (i == 0 || i + 1 == n ? 0.5 : 1.0) * f;
  }
  const double dt = draw.T / static_cast<double>(n - 1);
  return draw.U * draw.U / std::pow(draw.ell, 4) * sum * dt;
}

Estimate mc_moment(const EddyConfig& config) {
  validate(config);
  const double z_ell = ell_normalization(config.eta);
  return run_draws(config.samples, config.threads, [&](std::int64_t i) {
    CounterRng rng(config.seed, purpose_moment + static_cast<std::uint32_t>(config.order), static_cast<std::uint32_t>(i));
    const double ell = sample_ell(config.eta, rng.uniform());
    Vec3 x0;
    const double w = sample_start(ell, config.r_max, rng, x0);
    const double u2 = std::cbrt(ell * ell);
    const double T = ell * ell;
    const double avg = unit_path_integral(x0 / ell, config.steps, config.order, ell, rng);
    return z_ell * w * u2 / std::pow(ell, 4) * T * avg;
  });
}

Estimate canonical_constant(EddyOrder order, std::int64_t samples, std::uint64_t seed, int steps, double r_max,
                            int threads) {
  if (samples < 1) throw ConfigError("samples", "must be positive");
  if (steps < 1) throw ConfigError("steps", "must be positive");
  return run_draws(samples, threads, [&](std::int64_t i) {
    CounterRng rng(seed, purpose_canonical + static_cast<std::uint32_t>(order), static_cast<std::uint32_t>(i));
    Vec3 z0;
    const double w = sample_start(1.0, r_max, rng, z0);
    return w * unit_path_integral(z0, steps, order, 1.0, rng);
  });
}

double truncation_tail(EddyOrder order, double r_max) {
  // Far field: ‖DK₁‖² = 6/(16π²r⁶), ‖D²K₁‖² = 90/(16π²r⁸).
  return order == EddyOrder::grad ? 1 / (2 * pi * std::pow(r_max, 3)) : 4.5 / (pi * std::pow(r_max, 5));
}

double reduced_moment(EddyOrder order, double eta, double J) {
  if (!(eta > 0 && eta <= 1)) throw DomainError("eta must lie in (0, 1]");
  return order == EddyOrder::grad ? J * 0.75 * (std::pow(eta, -4.0 / 3) - 1) : J * 0.3 * (std::pow(eta, -10.0 / 3) - 1);
}

Estimate occupation_time_mc(double ell, double T, std::int64_t samples, std::uint64_t seed, int steps, int threads) {
  if (!(ell > 0) || !(T > 0)) throw DomainError("occupation time needs positive ell and T");
  if (samples < 1) throw ConfigError("samples", "must be positive");
  const double scale = std::max(ell, std::sqrt(T));
  constexpr double r_max = 50;
  return run_draws(samples, threads, [&](std::int64_t i) {
    CounterRng rng(seed, purpose_occupation, static_cast<std::uint32_t>(i));
    Vec3 x;
    const double w = sample_start(scale, r_max, rng, x);
    const double sd = std::sqrt(T / steps);
    const double l2 = ell * ell;
    double sum = 0.5 * (x.squaredNorm() < l2 ? 1.0 : 0.0);
    for (int k = 1; k <= steps; ++k) {
      const auto [a, b] = rng.normal_pair();
      x += sd * Vec3(a, b, rng.normal());
      sum += (k == steps ? 0.5 : 1.0) * (x.squaredNorm() < l2 ? 1.0 : 0.0);
    }
    return w * sum * T / steps;
  });
}

SlopeFit slope_fit(const std::vector<double>& xs, const std::vector<double>& ys, const std::vector<double>& errs) {
  const std::size_t n = xs.size();
  if (n < 3 || ys.size() != n || (!errs.empty() && errs.size() != n)) {
    throw DomainError("slope fit needs at least three matching points");
  }
  bool weighted = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0) || !(ys[i] > 0)) throw DomainError("slope fit needs positive data");
    if (!errs.empty()) {
      if (!(errs[i] >= 0)) throw DomainError("errors must be nonnegative");
      weighted = weighted || errs[i] > 0;
    }
  }
  if (weighted) {
    for (double e : errs) {
      if (!(e > 0)) throw DomainError("weighted fit needs positive errors at every point");
    }
  }
  Eigen::MatrixXd A(static_cast<Eigen::Index>(n), 2);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n)), w(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    A(k, 0) = std::log(xs[i]);
    A(k, 1) = 1;
    y(k) = std::log(ys[i]);
    w(k) = weighted ? ys[i] / errs[i] : 1.0;
  }
  const Eigen::MatrixXd Aw = w.asDiagonal() * A;
  const Eigen::VectorXd yw = w.asDiagonal() * y;
  const Eigen::Matrix2d normal = Aw.transpose() * Aw;
  const Eigen::Vector2d coef = normal.ldlt().solve(Aw.transpose() * yw);
  const Eigen::Matrix2d cov = normal.inverse();
  SlopeFit out;
  out.slope = coef(0);
  out.intercept = coef(1);
  if (weighted) {
    const boost::math::normal z;
    out.ci = boost::math::quantile(z, 0.975) * std::sqrt(cov(0, 0));
  } else {
    const double rss = (yw - Aw * coef).squaredNorm();
    const double s2 = rss / static_cast<double>(n - 2);
    const boost::math::students_t t(static_cast<double>(n - 2));
    out.ci = boost::math::quantile(t, 0.975) * std::sqrt(s2 * cov(0, 0));
  }
  return out;
}

}  // namespace k41
