#include "k41/noise.hpp"

#include "k41/error.hpp"
#include "k41/spectral.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace k41 {

NoiseSpec::NoiseSpec(LatticePtr lattice, std::vector<Eigen::MatrixXcd> sigma, double amp)
    : lattice_(std::move(lattice)), sigma_(std::move(sigma)), amp_(amp) {
  const int d = lattice_->dim();
  if (static_cast<Index>(sigma_.size()) != lattice_->size()) {
    throw ConfigError("sigma", "one matrix per lattice mode required");
  }
  for (const auto& s : sigma_) {
    if (s.rows() != d || s.cols() != d) throw ConfigError("sigma", "noise matrices must be d×d");
  }
  if (!(amp >= 0.0) || !std::isfinite(amp)) throw ConfigError("amp", "noise amplitude must be nonnegative");
  half_sq_.resize(lattice_->half_size());
  for (Index h = 0; h < lattice_->half_size(); ++h) half_sq_(h) = half_sigma(h).squaredNorm();
  const double unit2 = lattice_->unit() * lattice_->unit();
  for (Index i = 0; i < lattice_->size(); ++i) {
    const double s = this->sigma(i).squaredNorm();
    sum_sq_ += s;
    sum_k2_sq_ += unit2 * lattice_->modes().col(i).squaredNorm() * s;
  }
}

Index NoiseSpec::support() const {
  return std::count_if(sigma_.begin(), sigma_.end(), [](const Eigen::MatrixXcd& s) { return s.squaredNorm() > 0; });
}

NoiseSpec NoiseSpec::relabeled(LatticePtr lattice, double amp) const {
  if (!lattice->same_modes(*lattice_)) throw ConfigError("lattice", "relabeling needs identical mode labels");
  return NoiseSpec(std::move(lattice), sigma_, amp);
}

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
}

const ValidationCheck& ValidationReport::check(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw ConfigError("check", "no validation check named " + name);
}

namespace {

/// Signed permutation matrices with determinant +1.
std::vector<Eigen::MatrixXi> coordinate_rotations(int d) {
  std::vector<int> perm(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::vector<Eigen::MatrixXi> out;
  do {
    for (int signs = 0; signs < (1 << d); ++signs) {
      Eigen::MatrixXi r = Eigen::MatrixXi::Zero(d, d);
      for (int i = 0; i < d; ++i) r(i, perm[static_cast<std::size_t>(i)]) = (signs >> i) & 1 ? -1 : 1;
      if (r.cast<double>().determinant() > 0) out.push_back(r);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

}  // namespace

ValidationReport validate_spec(const NoiseSpec& spec, double tol) {
  const auto& lat = spec.lattice();
  ValidationReport report;

  double scale = 0;
  for (Index i = 0; i < lat.size(); ++i) scale = std::max(scale, spec.sigma(i).norm());
  const double ref = scale > 0 ? scale : 1.0;

  double div = 0;
  for (Index i = 0; i < lat.size(); ++i) {
    const Eigen::VectorXcd k = (lat.unit() * lat.modes().col(i).cast<double>()).cast<Complex>();
    const double kn = k.norm();
    div = std::max(div, (k.transpose() * spec.sigma(i)).norm() / (kn * ref));
  }
  report.checks.push_back({"incompressibility", div <= tol, div});

  double real = 0;
  for (Index i = 0; i < lat.size(); ++i) {
    real = std::max(real, (spec.sigma(lat.negation(i)) - spec.sigma(i).conjugate()).norm() / ref);
  }
  report.checks.push_back({"reality", real <= tol, real});

  const bool finite = std::isfinite(spec.sigma_sq_sum()) && std::isfinite(spec.k2_sigma_sq_sum());
  report.checks.push_back({"summability", finite, finite ? 0.0 : std::numeric_limits<double>::infinity()});

  double iso = 0;
  const auto rotations = coordinate_rotations(lat.dim());
  for (Index i = 0; i < lat.size(); ++i) {
    const double a = spec.sigma(i).norm();
    for (const auto& r : rotations) {
      const Eigen::VectorXi m = r * lat.modes().col(i);
      iso = std::max(iso, std::abs(spec.sigma(lat.find(m)).norm() - a) / ref);
    }
  }
  report.checks.push_back({"isotropy", iso <= tol, iso});
  return report;
}

NoiseSpec make_isotropic_spec(LatticePtr lattice, const Profile& profile, std::uint64_t seed, double amp) {
  const int d = lattice->dim();
  CounterRng rng(seed, 0x6e6f6973u, 0);
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  }
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();

  std::vector<Eigen::MatrixXcd> sigma(static_cast<std::size_t>(lattice->size()));
  for (Index i = 0; i < lattice->size(); ++i) {
    const Eigen::VectorXd k = lattice->unit() * lattice->modes().col(i).cast<double>();
    const double kn = k.norm();
    const double p = profile(kn);
    if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("profile", "forcing profile must be finite and nonnegative");
    const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(d, d) - k * k.transpose() / (kn * kn);
    sigma[static_cast<std::size_t>(i)] = (p * proj * q).cast<Complex>();
  }
  return NoiseSpec(std::move(lattice), std::move(sigma), amp);
}

Profile shell_profile(double unit, double kf, double intensity) {
  return [unit, kf, intensity](double k) { return k / unit <= kf * (1 + 1e-12) ? intensity : 0.0; };
}

Increments sample_brownian(const WaveLattice& lattice, double dt, CounterRng& rng) {
  const int d = lattice.dim();
  Increments db(d, lattice.half_size());
  const double s = std::sqrt(dt / 2);
  for (Index h = 0; h < lattice.half_size(); ++h) {
    for (int c = 0; c < d; ++c) {
      const auto [re, im] = rng.normal_pair();
      db(c, h) = Complex(s * re, s * im);
    }
  }
  return db;
}

Field apply_noise(const NoiseSpec& spec, const Increments& db) {
  const auto& lat = spec.lattice();
  Field out(spec.lattice_ptr());
  for (Index h = 0; h < lat.half_size(); ++h) {
    if (spec.half_sigma_sq()(h) == 0) continue;
    out.coeffs().col(h) = spec.amp() * (spec.half_sigma(h) * db.col(h));
  }
  return out;
}

Field sample_increment(const NoiseSpec& spec, double dt, CounterRng& rng) {
  if (dt < 0) throw ConfigError("dt", "time step must be nonnegative");
  return apply_noise(spec, sample_brownian(spec.lattice(), dt, rng));
}

Field random_field(LatticePtr lattice, CounterRng& rng, double decay) {
  Field u(lattice);
  for (Index h = 0; h < lattice->half_size(); ++h) {
    const double w = std::pow(1 + lattice->half_k2()(h), -decay / 2);
    for (int c = 0; c < lattice->dim(); ++c) {
      const auto [re, im] = rng.normal_pair();
      u.coeffs()(c, h) = w * Complex(re, im);
    }
  }
  return leray_project(std::move(u));
}

BrownianPath rescale_brownian_path(const BrownianPath& path, double lambda, double beta) {
  if (!(lambda > 0)) throw ConfigError("lambda", "scale factor must be positive");
  const auto& lat = *path.lattice;
  for (const auto& s : path.steps) {
    if (s.rows() != lat.dim() || s.cols() != lat.half_size()) {
      throw ConfigError("increments", "recorded increments do not match their lattice");
    }
  }
  BrownianPath out;
  out.lattice = std::make_shared<const WaveLattice>(lat.rescaled(lambda));
  out.dt = path.dt * std::pow(lambda, -(1 + beta));
  const double f = std::pow(lambda, -(1 + beta) / 2);
  out.steps.reserve(path.steps.size());
  for (const auto& s : path.steps) out.steps.push_back(f * s);
  return out;
}

BrownianPath rescale_brownian_path(const BrownianPath& path, double lambda, double beta, const WaveLattice& target) {
  auto out = rescale_brownian_path(path, lambda, beta);
  const auto& got = *out.lattice;
  if (!got.same_modes(target) || std::abs(got.length() - target.length()) > 1e-12 * target.length()) {
    throw ConfigError("lattice", "rescaled increments do not live on the target lattice");
  }
  return out;
}

}  // namespace k41
