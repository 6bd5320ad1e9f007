#pragma once

#include "k41/error.hpp"
#include "k41/lattice.hpp"

#include <Eigen/Core>

#include <complex>
#include <memory>
#include <utility>

namespace k41 {

/// Real, zero-mean periodic vector field stored by its Fourier coefficients
/// û(k) on the canonical half of a lattice, with u(x) = Σ û(k) e^{-ik·x}.
/// Column j of `coeffs()` is û at canonical mode j; û(-k) = conj(û(k)).
template <typename Scalar>
class SpectralField {
 public:
  using Complex = std::complex<Scalar>;
  using Coeffs = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

  SpectralField() = default;

  explicit SpectralField(LatticePtr lattice)
      : lattice_(std::move(lattice)),
        coeffs_(Coeffs::Zero(lattice_->dim(), lattice_->half_size())) {}

  SpectralField(LatticePtr lattice, Coeffs coeffs) : lattice_(std::move(lattice)), coeffs_(std::move(coeffs)) {
    if (coeffs_.rows() != lattice_->dim() || coeffs_.cols() != lattice_->half_size()) {
      throw ConfigError("coeffs", "coefficient block does not match the lattice");
    }
  }

  const WaveLattice& lattice() const { return *lattice_; }
  const LatticePtr& lattice_ptr() const noexcept { return lattice_; }
  int dim() const { return lattice_->dim(); }

  const Coeffs& coeffs() const noexcept { return coeffs_; }
  Coeffs& coeffs() noexcept { return coeffs_; }

  /// Coefficient at a full-lattice index, reconstructed by reality.
  Eigen::Matrix<Complex, Eigen::Dynamic, 1> at(Index full) const {
    bool conj = false;
    const Index h = lattice_->full_to_half(full, conj);
    if (conj) return coeffs_.col(h).conjugate();
    return coeffs_.col(h);
  }

  /// Coefficients on the full lattice, one column per mode in lattice order.
  Coeffs to_full() const {
    Coeffs out(dim(), lattice_->size());
    for (Index i = 0; i < lattice_->size(); ++i) out.col(i) = at(i);
    return out;
  }

  /// Field from full-lattice coefficients; only the canonical columns are read.
  static SpectralField from_full(LatticePtr lattice, const Coeffs& full) {
    Coeffs half(lattice->dim(), lattice->half_size());
    for (Index h = 0; h < lattice->half_size(); ++h) half.col(h) = full.col(lattice->half_to_full(h));
    return SpectralField(std::move(lattice), std::move(half));
  }

  template <typename Other>
  SpectralField<Other> cast() const {
    return SpectralField<Other>(lattice_, coeffs_.template cast<std::complex<Other>>());
  }

  SpectralField& operator+=(const SpectralField& o) {
    check_same(o);
    coeffs_ += o.coeffs_;
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    check_same(o);
    coeffs_ -= o.coeffs_;
    return *this;
  }
  SpectralField& operator*=(Scalar s) {
    coeffs_ *= s;
    return *this;
  }

  void check_same(const SpectralField& o) const {
    if (!(lattice_ == o.lattice_ || *lattice_ == *o.lattice_)) {
      throw ConfigError("lattice", "fields live on different lattices");
    }
  }

 private:
  LatticePtr lattice_;
  Coeffs coeffs_;
};

template <typename Scalar>
SpectralField<Scalar> operator+(SpectralField<Scalar> a, const SpectralField<Scalar>& b) {
  return a += b;
}
template <typename Scalar>
SpectralField<Scalar> operator-(SpectralField<Scalar> a, const SpectralField<Scalar>& b) {
  return a -= b;
}
template <typename Scalar>
SpectralField<Scalar> operator*(Scalar s, SpectralField<Scalar> a) {
  return a *= s;
}

using Field = SpectralField<double>;
using Complex = std::complex<double>;

}  // namespace k41
