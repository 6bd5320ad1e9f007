#pragma once

#include "k41/grid.hpp"
#include "k41/spectral_field.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace k41 {

enum class Nonlinearity { direct, pseudospectral };

Nonlinearity parse_nonlinearity(const std::string& name);
std::string to_string(Nonlinearity n);

/// π B(u,u) for fields on one lattice, B(u,u) = (u·∇)u.
///
/// Raw coefficients c(k) = −i Σ_{h+l=k} (l·û(h)) û(l) with h, l in the lattice,
/// followed by Leray projection. `direct` sums the convolution; `pseudospectral`
/// forms ∇·(u⊗u) on a grid of M >= 3n+1 points per axis, which is alias-free.
class NonlinearOperator {
 public:
  NonlinearOperator(LatticePtr lattice, Nonlinearity method);

  Nonlinearity method() const noexcept { return method_; }

  /// Writes π B(u,u) into `out` (reallocated when needed).
  void apply(const Field& u, Field& out);

  Field operator()(const Field& u) {
    Field out(lattice_);
    apply(u, out);
    return out;
  }

 private:
  void apply_direct(const Field& u, Field::Coeffs& c);
  void apply_grid(const Field& u, Field::Coeffs& c);

  LatticePtr lattice_;
  Nonlinearity method_;
  // direct
  std::vector<Index> box_of_full_;
  std::vector<Index> diff_box_;
  Index center_ = 0;
  Eigen::MatrixXd full_k_;
  // pseudospectral
  std::unique_ptr<GridTransform<double>> grid_;
  std::vector<GridTransform<double>::Grid> work_;
};

/// One-shot π B(u,u).
Field nonlinear_term(const Field& u, Nonlinearity method = Nonlinearity::pseudospectral);

}  // namespace k41
