#include "k41/lattice.hpp"

#include "k41/error.hpp"

#include <cmath>
#include <numbers>

namespace k41 {

namespace {

bool is_canonical(const Eigen::VectorXi& m) {
  for (Index a = 0; a < m.size(); ++a) {
    if (m(a) != 0) return m(a) > 0;
  }
  return false;
}

}  // namespace

WaveLattice::WaveLattice(int dim, double length, int truncation)
    : dim_(dim), length_(length), n_(truncation) {
  if (dim != 2 && dim != 3) throw ConfigError("d", "dimension must be 2 or 3");
  if (!(length > 0.0) || !std::isfinite(length)) throw ConfigError("L", "box length must be positive");
  if (truncation < 1) throw ConfigError("n", "truncation must be at least 1");
  unit_ = 2.0 * std::numbers::pi / length;

  // Lexicographic enumeration of the box [-n, n]^d keeps |m| <= n.
  const int side = 2 * n_ + 1;
  Index box_count = 1;
  for (int a = 0; a < dim_; ++a) box_count *= side;
  box_.assign(static_cast<std::size_t>(box_count), -1);

  std::vector<Eigen::VectorXi> found;
  Eigen::VectorXi m(dim_);
  for (Index b = 0; b < box_count; ++b) {
    Index rest = b;
    for (int a = dim_ - 1; a >= 0; --a) {
      m(a) = static_cast<int>(rest % side) - n_;
      rest /= side;
    }
    const int norm2 = m.squaredNorm();
    if (norm2 == 0 || norm2 > n_ * n_) continue;
    box_[static_cast<std::size_t>(b)] = static_cast<Index>(found.size());
    found.push_back(m);
  }

  const Index count = static_cast<Index>(found.size());
  modes_.resize(dim_, count);
  for (Index i = 0; i < count; ++i) modes_.col(i) = found[static_cast<std::size_t>(i)];

  neg_.resize(static_cast<std::size_t>(count));
  to_half_.resize(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    neg_[static_cast<std::size_t>(i)] = find(-modes_.col(i));
    if (is_canonical(modes_.col(i))) {
      to_half_[static_cast<std::size_t>(i)] = static_cast<Index>(half_.size());
      half_.push_back(i);
    }
  }
  for (Index i = 0; i < count; ++i) {
    if (!is_canonical(modes_.col(i))) {
      to_half_[static_cast<std::size_t>(i)] = -to_half_[static_cast<std::size_t>(negation(i))] - 1;
    }
  }

  const Index h = half_size();
  half_modes_.resize(dim_, h);
  for (Index j = 0; j < h; ++j) half_modes_.col(j) = modes_.col(half_to_full(j));
  half_k_ = unit_ * half_modes_.cast<double>();
  half_k2_ = half_k_.colwise().squaredNorm().transpose();
}

Index WaveLattice::find(const Eigen::Ref<const Eigen::VectorXi>& m) const {
  if (m.size() != dim_) return -1;
  const int side = 2 * n_ + 1;
  Index b = 0;
  for (int a = 0; a < dim_; ++a) {
    if (m(a) < -n_ || m(a) > n_) return -1;
    b = b * side + (m(a) + n_);
  }
  return box_[static_cast<std::size_t>(b)];
}

LatticePtr build_lattice(int dim, double length, int truncation) {
  return std::make_shared<const WaveLattice>(dim, length, truncation);
}

int smooth_size(int lo) {
  for (int m = std::max(lo, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

}  // namespace k41
