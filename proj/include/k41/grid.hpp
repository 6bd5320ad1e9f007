#pragma once

#include "k41/error.hpp"
#include "k41/lattice.hpp"

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include <complex>
#include <vector>

namespace k41 {

/// Uniform M^d grid on [0,L)^d tied to one lattice.
///
/// Grid point j sits at x = (L/M)·j and is stored at linear index
/// j₀ + M j₁ + M² j₂. Real fields travel in pairs: the complex grid holds
/// f + i g, so one transform serves two real fields.
template <typename Scalar>
class GridTransform {
 public:
  using C = std::complex<Scalar>;
  using Grid = std::vector<C>;
  using Row = Eigen::Matrix<C, 1, Eigen::Dynamic>;

  GridTransform(const WaveLattice& lattice, int points)
      : dim_(lattice.dim()), m_(points), half_(lattice.half_size()) {
    if (m_ < 2 * lattice.truncation() + 1) throw ConfigError("grid", "grid too coarse for the lattice");
    size_ = 1;
    for (int a = 0; a < dim_; ++a) size_ *= m_;
    pos_.resize(static_cast<std::size_t>(half_));
    neg_.resize(static_cast<std::size_t>(half_));
    for (Index h = 0; h < half_; ++h) {
      Index p = 0, q = 0, stride = 1;
      for (int a = 0; a < dim_; ++a) {
        const int c = lattice.half_modes()(a, h);
        p += stride * wrap(c);
        q += stride * wrap(-c);
        stride *= m_;
      }
      pos_[static_cast<std::size_t>(h)] = p;
      neg_[static_cast<std::size_t>(h)] = q;
    }
    line_in_.resize(static_cast<std::size_t>(m_));
    line_out_.resize(static_cast<std::size_t>(m_));
  }

  int dim() const noexcept { return dim_; }
  int points() const noexcept { return m_; }
  Index size() const noexcept { return size_; }

  /// Values of the real fields with canonical coefficients f and g as f + i g.
  template <typename F, typename G>
  void synthesize(const Eigen::MatrixBase<F>& f, const Eigen::MatrixBase<G>& g, Grid& out) {
    out.assign(static_cast<std::size_t>(size_), C(0));
    const C i1(0, 1);
    for (Index h = 0; h < half_; ++h) {
      const C a = f(h), b = g(h);
      out[static_cast<std::size_t>(pos_[static_cast<std::size_t>(h)])] = a + i1 * b;
      out[static_cast<std::size_t>(neg_[static_cast<std::size_t>(h)])] = std::conj(a) + i1 * std::conj(b);
    }
    transform(out, true);
  }

  template <typename F>
  void synthesize(const Eigen::MatrixBase<F>& f, Grid& out) {
    out.assign(static_cast<std::size_t>(size_), C(0));
    for (Index h = 0; h < half_; ++h) {
      out[static_cast<std::size_t>(pos_[static_cast<std::size_t>(h)])] = f(h);
      out[static_cast<std::size_t>(neg_[static_cast<std::size_t>(h)])] = std::conj(f(h));
    }
    transform(out, true);
  }

  /// Canonical coefficients of the real fields Re(grid) and Im(grid); the grid is overwritten.
  void analyze(Grid& grid, Row& f, Row& g) {
    transform(grid, false);
    f.resize(half_);
    g.resize(half_);
    const C i1(0, 1);
    for (Index h = 0; h < half_; ++h) {
      const C p = grid[static_cast<std::size_t>(pos_[static_cast<std::size_t>(h)])];
      const C q = std::conj(grid[static_cast<std::size_t>(neg_[static_cast<std::size_t>(h)])]);
      f(h) = (p + q) / Scalar(2);
      g(h) = (p - q) / (Scalar(2) * i1);
    }
  }

  void analyze(Grid& grid, Row& f) {
    transform(grid, false);
    f.resize(half_);
    for (Index h = 0; h < half_; ++h) {
      const C p = grid[static_cast<std::size_t>(pos_[static_cast<std::size_t>(h)])];
      const C q = std::conj(grid[static_cast<std::size_t>(neg_[static_cast<std::size_t>(h)])]);
      f(h) = (p + q) / Scalar(2);
    }
  }

  /// Forward: Σ c e^{-2πi m·j/M}. Inverse: (1/M^d) Σ v e^{+2πi m·j/M}.
  void transform(Grid& g, bool forward) {
    Index stride = 1;
    for (int a = 0; a < dim_; ++a) {
      const Index block = stride * m_;
      for (Index base = 0; base < size_; base += block) {
        for (Index off = 0; off < stride; ++off) {
          const Index start = base + off;
          for (int t = 0; t < m_; ++t) line_in_[static_cast<std::size_t>(t)] = g[static_cast<std::size_t>(start + t * stride)];
          if (forward) {
            fft_.fwd(line_out_.data(), line_in_.data(), m_);
          } else {
            fft_.inv(line_out_.data(), line_in_.data(), m_);
          }
          for (int t = 0; t < m_; ++t) g[static_cast<std::size_t>(start + t * stride)] = line_out_[static_cast<std::size_t>(t)];
        }
      }
      stride = block;
    }
  }

 private:
  Index wrap(int c) const { return static_cast<Index>(((c % m_) + m_) % m_); }

  int dim_;
  int m_;
  Index half_;
  Index size_ = 0;
  std::vector<Index> pos_;
  std::vector<Index> neg_;
  std::vector<C> line_in_;
  std::vector<C> line_out_;
  Eigen::FFT<Scalar> fft_;
};

}  // namespace k41
