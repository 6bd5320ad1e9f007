#pragma once

#include "k41/lattice.hpp"
#include "k41/rng.hpp"
#include "k41/spectral_field.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace k41 {

/// Per-mode noise matrices σ_k (indexed by full-lattice mode) and amplitude.
///
/// The Brownian motions are complex per canonical mode, mirrored to −k, with
/// real and imaginary parts of variance dt/2 each. The forcing at mode k is
/// amp·σ_k·ΔB_k, so E‖amp·σ_kΔB_k‖² = amp²|σ_k|²dt with |·| the Frobenius norm.
class NoiseSpec {
 public:
  NoiseSpec() = default;
  NoiseSpec(LatticePtr lattice, std::vector<Eigen::MatrixXcd> sigma, double amp);

  const WaveLattice& lattice() const { return *lattice_; }
  const LatticePtr& lattice_ptr() const noexcept { return lattice_; }
  double amp() const noexcept { return amp_; }
  /// σ at a full-lattice index.
  const Eigen::MatrixXcd& sigma(Index full) const { return sigma_[static_cast<std::size_t>(full)]; }
  /// σ at a canonical index.
  const Eigen::MatrixXcd& half_sigma(Index h) const { return sigma(lattice_->half_to_full(h)); }
  /// |σ_k|² per canonical mode.
  const Eigen::VectorXd& half_sigma_sq() const noexcept { return half_sq_; }
  /// Σ_k |σ_k|² over the full lattice.
  double sigma_sq_sum() const noexcept { return sum_sq_; }
  /// Σ_k |k|²|σ_k|² over the full lattice.
  double k2_sigma_sq_sum() const noexcept { return sum_k2_sq_; }
  /// Number of modes with nonzero σ.
  Index support() const;

  /// Same σ per integer label on another lattice with identical labels.
  NoiseSpec relabeled(LatticePtr lattice, double amp) const;

 private:
  LatticePtr lattice_;
  std::vector<Eigen::MatrixXcd> sigma_;
  double amp_ = 0;
  Eigen::VectorXd half_sq_;
  double sum_sq_ = 0;
  double sum_k2_sq_ = 0;
};

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double worst = 0;  ///< largest violation found
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool passed() const;
  const ValidationCheck& check(const std::string& name) const;
};

/// Incompressibility, reality, summability and discrete isotropy of a spec.
ValidationReport validate_spec(const NoiseSpec& spec, double tol = 1e-12);

using Profile = std::function<double(double)>;

/// σ_k = profile(|k|)·(I − kkᵀ/|k|²)·Q with Q a real orthonormal matrix drawn from `seed`.
NoiseSpec make_isotropic_spec(LatticePtr lattice, const Profile& profile, std::uint64_t seed, double amp = 1.0);

/// Intensity on the shells |m| <= kf of a lattice with spacing `unit`, zero elsewhere.
Profile shell_profile(double unit, double kf, double intensity = 1.0);

using Increments = Field::Coeffs;

/// Standard complex Brownian increments for every canonical mode (d×H block).
Increments sample_brownian(const WaveLattice& lattice, double dt, CounterRng& rng);

/// amp·σ_kΔB_k per canonical mode.
Field apply_noise(const NoiseSpec& spec, const Increments& db);

/// One forcing increment amp·σ_kΔB_k drawn from `rng`.
Field sample_increment(const NoiseSpec& spec, double dt, CounterRng& rng);

/// Divergence-free field with coefficients (1 + |k|²)^{-decay/2}·P_k·g, g standard complex Gaussian.
Field random_field(LatticePtr lattice, CounterRng& rng, double decay = 0.0);

/// Recorded Brownian increments at uniform step dt.
struct BrownianPath {
  LatticePtr lattice;
  double dt = 0;
  std::vector<Increments> steps;
};

/// Increments of β̃_k(t) = λ^{-(1+β)/2} β_k(λ^{1+β} t) on the lattice λΛ_L.
BrownianPath rescale_brownian_path(const BrownianPath& path, double lambda, double beta);

/// As above, additionally requiring the result to live on `target`.
BrownianPath rescale_brownian_path(const BrownianPath& path, double lambda, double beta, const WaveLattice& target);

}  // namespace k41
