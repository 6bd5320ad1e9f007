#pragma once

#include "k41/spectral_field.hpp"

#include <Eigen/Core>

#include <cmath>

namespace k41 {

/// Quadratic functionals of a field, all per unit volume.
template <typename Scalar>
struct FieldNorms {
  Scalar energy = 0;        ///< Σ‖û‖²
  Scalar grad_sq = 0;       ///< Σ|k|²‖û‖²
  Scalar hess_sq = 0;       ///< Σ|k|⁴‖û‖²
  Scalar curl_sq = 0;       ///< Σ|k×û|²
  Scalar curl_grad_sq = 0;  ///< Σ|k|²|k×û|²
};

namespace detail {

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> wavevector(const WaveLattice& lat, Index h) {
  return lat.half_wavevectors().col(h).template cast<Scalar>();
}

/// |k × v|² with the 2D scalar analog |k₁v₂ − k₂v₁|².
template <typename Scalar, typename K, typename V>
Scalar cross_sq(const K& k, const V& v) {
  if (k.size() == 2) return std::norm(k(0) * v(1) - k(1) * v(0));
  return std::norm(k(1) * v(2) - k(2) * v(1)) + std::norm(k(2) * v(0) - k(0) * v(2)) +
         std::norm(k(0) * v(1) - k(1) * v(0));
}

}  // namespace detail

/// Per-mode projection û ← (I − kkᵀ/|k|²)û onto divergence-free fields.
template <typename Scalar>
SpectralField<Scalar> leray_project(SpectralField<Scalar> u) {
  const auto& lat = u.lattice();
  auto& c = u.coeffs();
  for (Index h = 0; h < lat.half_size(); ++h) {
    const auto k = detail::wavevector<Scalar>(lat, h);
    const std::complex<Scalar> dot = (k.template cast<std::complex<Scalar>>().transpose() * c.col(h))(0);
    c.col(h) -= (dot / Scalar(lat.half_k2()(h))) * k.template cast<std::complex<Scalar>>();
  }
  return u;
}

/// Point value u(x) = Re Σ û(k)e^{-ik·x}, summed over both halves of the lattice.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> evaluate(const SpectralField<Scalar>& u, const Eigen::MatrixBase<Derived>& x) {
  const auto& lat = u.lattice();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(lat.dim());
  for (Index h = 0; h < lat.half_size(); ++h) {
    const Scalar phase = -detail::wavevector<Scalar>(lat, h).dot(x.template cast<Scalar>());
    const std::complex<Scalar> e(std::cos(phase), std::sin(phase));
    out += Scalar(2) * (u.coeffs().col(h) * e).real();
  }
  return out;
}

template <typename Scalar>
FieldNorms<Scalar> field_norms(const SpectralField<Scalar>& u) {
  const auto& lat = u.lattice();
  FieldNorms<Scalar> out;
  for (Index h = 0; h < lat.half_size(); ++h) {
    const auto k = detail::wavevector<Scalar>(lat, h);
    const auto v = u.coeffs().col(h);
    const Scalar k2 = Scalar(lat.half_k2()(h));
    const Scalar e = v.squaredNorm();
    const Scalar c = detail::cross_sq<Scalar>(k, v);
    out.energy += e;
    out.grad_sq += k2 * e;
    out.hess_sq += k2 * k2 * e;
    out.curl_sq += c;
    out.curl_grad_sq += k2 * c;
  }
  out.energy *= 2;
  out.grad_sq *= 2;
  out.hess_sq *= 2;
  out.curl_sq *= 2;
  out.curl_grad_sq *= 2;
  return out;
}

/// Vorticity coefficients −ik×û: 3 rows in 3D, one (scalar vorticity) in 2D.
template <typename Scalar>
typename SpectralField<Scalar>::Coeffs curl(const SpectralField<Scalar>& u) {
  using C = std::complex<Scalar>;
  const auto& lat = u.lattice();
  const int rows = lat.dim() == 3 ? 3 : 1;
  typename SpectralField<Scalar>::Coeffs w(rows, lat.half_size());
  const C mi(0, -1);
  for (Index h = 0; h < lat.half_size(); ++h) {
    const auto k = detail::wavevector<Scalar>(lat, h);
    const auto v = u.coeffs().col(h);
    if (rows == 1) {
      w(0, h) = mi * (k(0) * v(1) - k(1) * v(0));
    } else {
      w(0, h) = mi * (k(1) * v(2) - k(2) * v(1));
      w(1, h) = mi * (k(2) * v(0) - k(0) * v(2));
      w(2, h) = mi * (k(0) * v(1) - k(1) * v(0));
    }
  }
  return w;
}

/// Vorticity of a 3D field as a field on the same lattice.
template <typename Scalar>
SpectralField<Scalar> curl_field(const SpectralField<Scalar>& u) {
  if (u.dim() != 3) throw UnsupportedError("curl_field needs d = 3");
  return SpectralField<Scalar>(u.lattice_ptr(), curl(u));
}

/// ⟨u, v⟩_H = L^{-d}∫u·v.
template <typename Scalar>
Scalar inner(const SpectralField<Scalar>& u, const SpectralField<Scalar>& v) {
  u.check_same(v);
  Scalar s = 0;
  for (Index h = 0; h < u.lattice().half_size(); ++h) {
    s += (u.coeffs().col(h).conjugate().transpose() * v.coeffs().col(h))(0).real();
  }
  return 2 * s;
}

/// ⟨Au, v⟩_H with A = −Δ, i.e. Σ|k|² û·conj(v̂).
template <typename Scalar>
Scalar stokes_inner(const SpectralField<Scalar>& u, const SpectralField<Scalar>& v) {
  u.check_same(v);
  Scalar s = 0;
  for (Index h = 0; h < u.lattice().half_size(); ++h) {
    s += Scalar(u.lattice().half_k2()(h)) *
         (u.coeffs().col(h).conjugate().transpose() * v.coeffs().col(h))(0).real();
  }
  return 2 * s;
}

/// ⟨curl u, curl v⟩_H.
template <typename Scalar>
Scalar curl_inner(const SpectralField<Scalar>& u, const SpectralField<Scalar>& v) {
  u.check_same(v);
  const auto a = curl(u);
  const auto b = curl(v);
  Scalar s = 0;
  for (Index h = 0; h < a.cols(); ++h) s += (a.col(h).conjugate().transpose() * b.col(h))(0).real();
  return 2 * s;
}

/// Σ_k |e^{-ik_a r} − 1|²‖û(k)‖² = L^{-d}∫‖u(x + r e_a) − u(x)‖² dx.
template <typename Scalar>
Scalar s2_spectral(const SpectralField<Scalar>& u, Scalar r, int axis) {
  const auto& lat = u.lattice();
  if (axis < 0 || axis >= lat.dim()) throw ConfigError("axis", "coordinate direction out of range");
  Scalar s = 0;
  for (Index h = 0; h < lat.half_size(); ++h) {
    const Scalar z = Scalar(lat.half_wavevectors()(axis, h)) * r;
    // |e^{-iz} − 1|² = 4 sin²(z/2), free of cancellation at small z.
    const Scalar half_sin = std::sin(z / 2);
    s += 4 * half_sin * half_sin * u.coeffs().col(h).squaredNorm();
  }
  return 2 * s;
}

/// Gaussian multiplier φ̂(εk) = exp(−ε²|k|²/2) applied per mode.
template <typename Scalar>
SpectralField<Scalar> mollify(SpectralField<Scalar> u, Scalar eps) {
  if (eps < 0) throw ConfigError("eps", "mollification scale must be nonnegative");
  if (eps == 0) return u;
  const auto& lat = u.lattice();
  for (Index h = 0; h < lat.half_size(); ++h) {
    u.coeffs().col(h) *= std::exp(-eps * eps * Scalar(lat.half_k2()(h)) / 2);
  }
  return u;
}

/// Largest |k·û(k)|/|k| relative to the largest ‖û(k)‖; 0 for the zero field.
template <typename Scalar>
Scalar divergence_residual(const SpectralField<Scalar>& u) {
  const auto& lat = u.lattice();
  Scalar worst = 0, scale = 0;
  for (Index h = 0; h < lat.half_size(); ++h) {
    scale = std::max(scale, Scalar(u.coeffs().col(h).norm()));
    const Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1> k =
        detail::wavevector<Scalar>(lat, h).template cast<std::complex<Scalar>>();
    const Scalar dot = std::abs((k.transpose() * u.coeffs().col(h))(0));
    worst = std::max(worst, dot / std::sqrt(Scalar(lat.half_k2()(h))));
  }
  return scale > 0 ? worst / scale : Scalar(0);
}

}  // namespace k41
