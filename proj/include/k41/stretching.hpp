#pragma once

#include "k41/grid.hpp"
#include "k41/spectral_field.hpp"

#include <limits>
#include <optional>

namespace k41 {

template <typename Scalar>
struct StretchingIntegrals {
  Scalar mean_stretch = 0;  ///< L^{-3}∫⟨S_u ω, ω⟩
  Scalar stretch_l2_sq = 0; ///< L^{-3}∫⟨S_u ω, ω⟩², NaN when not requested
};

/// Pseudo-spectral evaluation of the vortex-stretching integrals of a 3D field.
///
/// The cubic integrand is averaged exactly on a grid with M > 3n points per
/// axis; its square needs M > 6n, so the second integral uses a finer grid.
template <typename Scalar>
class StretchingEvaluator {
 public:
  StretchingEvaluator(const WaveLattice& lattice, bool with_l2)
      : grid_(lattice, smooth_size((with_l2 ? 6 : 3) * lattice.truncation() + 1)), with_l2_(with_l2) {
    if (lattice.dim() != 3) throw UnsupportedError("vortex stretching vanishes identically for d = 2");
  }

  StretchingIntegrals<Scalar> operator()(const SpectralField<Scalar>& u) {
    using C = std::complex<Scalar>;
    const auto& lat = u.lattice();
    const Index half = lat.half_size();
    // Rows 0..8: ∂_j u_i at row 3i + j; rows 9..11: ω.
    Eigen::Matrix<C, Eigen::Dynamic, Eigen::Dynamic> f(12, half);
    const C mi(0, -1);
    for (Index h = 0; h < half; ++h) {
      const auto k = lat.half_wavevectors().col(h).template cast<Scalar>();
      const auto v = u.coeffs().col(h);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) f(3 * i + j, h) = mi * k(j) * v(i);
      }
      f(9, h) = mi * (k(1) * v(2) - k(2) * v(1));
      f(10, h) = mi * (k(2) * v(0) - k(0) * v(2));
      f(11, h) = mi * (k(0) * v(1) - k(1) * v(0));
    }
    for (int p = 0; p < 6; ++p) grid_.synthesize(f.row(2 * p), f.row(2 * p + 1), grids_[static_cast<std::size_t>(p)]);

    Scalar mean = 0, sq = 0;
    const Index n = grid_.size();
    for (Index x = 0; x < n; ++x) {
      const auto xs = static_cast<std::size_t>(x);
      Scalar du[9];
      for (std::size_t q = 0; q < 9; ++q) {
        const C c = grids_[q / 2][xs];
        du[q] = (q % 2 == 0) ? c.real() : c.imag();
      }
      const Scalar w[3] = {grids_[4][xs].imag(), grids_[5][xs].real(), grids_[5][xs].imag()};
      Scalar s = 0;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) s += w[i] * du[3 * i + j] * w[j];
      }
      mean += s;
      sq += s * s;
    }
    StretchingIntegrals<Scalar> out;
    out.mean_stretch = mean / Scalar(n);
    out.stretch_l2_sq = with_l2_ ? sq / Scalar(n) : std::numeric_limits<Scalar>::quiet_NaN();
    return out;
  }

 private:
  GridTransform<Scalar> grid_;
  bool with_l2_;
  typename GridTransform<Scalar>::Grid grids_[6];
};

/// Both stretching integrals of a 3D field; 2D raises UnsupportedError.
template <typename Scalar>
StretchingIntegrals<Scalar> stretching_integrals(const SpectralField<Scalar>& u) {
  if (u.dim() != 3) throw UnsupportedError("vortex stretching vanishes identically for d = 2");
  StretchingEvaluator<Scalar> eval(u.lattice(), true);
  return eval(u);
}

}  // namespace k41
