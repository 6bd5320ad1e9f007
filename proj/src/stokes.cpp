#include "k41/stokes.hpp"

#include "k41/error.hpp"

#include <cmath>

namespace k41 {

double stokes_mode_moment(double k2, double sigma_sq, double nu, double amp) {
  if (!(nu > 0)) throw DomainError("viscosity must be positive");
  if (!(k2 > 0)) throw DomainError("wavevector must be nonzero");
  return amp * amp * sigma_sq / (2 * nu * k2);
}

EnsembleStats stokes_stats(const NoiseSpec& spec, double nu) {
  const auto& lat = spec.lattice();
  Eigen::VectorXd m2(lat.half_size());
  for (Index h = 0; h < lat.half_size(); ++h) {
    m2(h) = stokes_mode_moment(lat.half_k2()(h), spec.half_sigma_sq()(h), nu, spec.amp());
  }
  return exact_stats(spec.lattice_ptr(), std::move(m2), nu, spec.amp());
}

StokesSummary::StokesSummary(const NoiseSpec& spec, double nu) : stats_(stokes_stats(spec, nu)) {
  if (spec.sigma_sq_sum() <= 0) throw DegenerateMeasure("empty noise spec: theta is undefined");
  epsilon_ = 0.5 * spec.amp() * spec.amp() * spec.sigma_sq_sum();
  theta_ = std::sqrt(spec.sigma_sq_sum() / spec.k2_sigma_sq_sum());
}

double StokesSummary::s2(double r) const {
  const auto& lat = *stats_.lattice;
  double total = 0;
  for (int a = 0; a < lat.dim(); ++a) {
    double s = 0;
    for (Index h = 0; h < lat.half_size(); ++h) {
      const double half_sin = std::sin(lat.half_wavevectors()(a, h) * r / 2);
      s += 4 * half_sin * half_sin * stats_.mode_m2(h);
    }
    total += 2 * s;
  }
  return total / lat.dim();
}

StokesSummary stokes_summary(const NoiseSpec& spec, double nu) { return StokesSummary(spec, nu); }

}  // namespace k41
