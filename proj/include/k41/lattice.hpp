#pragma once

#include <Eigen/Core>

#include <memory>
#include <vector>

namespace k41 {

using Index = Eigen::Index;

/// Truncated wavenumber lattice {k = (2π/L)m : 0 < |m| <= n} on the torus [0,L]^d.
///
/// Modes are held in lexicographic order of m. The canonical half keeps the m
/// whose first nonzero coordinate is positive; every other mode is the
/// negation of a canonical one.
class WaveLattice {
 public:
  WaveLattice(int dim, double length, int truncation);

  int dim() const noexcept { return dim_; }
  double length() const noexcept { return length_; }
  int truncation() const noexcept { return n_; }
  /// 2π/L, the lattice spacing in wavenumber space.
  double unit() const noexcept { return unit_; }

  /// Number of modes in the full (negation-closed) lattice.
  Index size() const noexcept { return modes_.cols(); }
  /// Number of canonical modes.
  Index half_size() const noexcept { return half_.size(); }

  /// Integer coordinates of all modes, one column per mode.
  const Eigen::MatrixXi& modes() const noexcept { return modes_; }
  /// Integer coordinates of the canonical modes.
  const Eigen::MatrixXi& half_modes() const noexcept { return half_modes_; }
  /// Physical wavevectors of the canonical modes.
  const Eigen::MatrixXd& half_wavevectors() const noexcept { return half_k_; }
  /// |k|^2 per canonical mode.
  const Eigen::VectorXd& half_k2() const noexcept { return half_k2_; }

  /// Full index of the negated mode.
  Index negation(Index full) const { return neg_[static_cast<std::size_t>(full)]; }
  /// Full index of a canonical mode.
  Index half_to_full(Index h) const { return half_[static_cast<std::size_t>(h)]; }
  /// Canonical index of a full mode; `conj` reports whether it is a negated one.
  Index full_to_half(Index full, bool& conj) const {
    const auto v = to_half_[static_cast<std::size_t>(full)];
    conj = v < 0;
    return conj ? -v - 1 : v;
  }

  /// Full index of the integer vector m, or -1 when m is not a lattice mode.
  Index find(const Eigen::Ref<const Eigen::VectorXi>& m) const;

  /// Same integer labels on the box of side L/λ, i.e. the lattice λΛ_L.
  WaveLattice rescaled(double lambda) const { return WaveLattice(dim_, length_ / lambda, n_); }

  /// Same dimension and labels (the box size may differ).
  bool same_modes(const WaveLattice& other) const noexcept {
    return dim_ == other.dim_ && n_ == other.n_;
  }
  bool operator==(const WaveLattice& other) const noexcept {
    return same_modes(other) && length_ == other.length_;
  }

 private:
  int dim_;
  double length_;
  int n_;
  double unit_;
  Eigen::MatrixXi modes_;
  Eigen::MatrixXi half_modes_;
  Eigen::MatrixXd half_k_;
  Eigen::VectorXd half_k2_;
  std::vector<Index> neg_;
  std::vector<Index> half_;
  std::vector<Index> to_half_;
  std::vector<Index> box_;
};

using LatticePtr = std::shared_ptr<const WaveLattice>;

/// Shared handle to a newly built lattice.
LatticePtr build_lattice(int dim, double length, int truncation);

/// Smallest integer >= lo whose only prime factors are 2, 3 and 5.
int smooth_size(int lo);

}  // namespace k41
