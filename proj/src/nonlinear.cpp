#include "k41/nonlinear.hpp"

#include "k41/error.hpp"
#include "k41/spectral.hpp"

#include <array>

namespace k41 {

Nonlinearity parse_nonlinearity(const std::string& name) {
  if (name == "direct") return Nonlinearity::direct;
  if (name == "pseudospectral") return Nonlinearity::pseudospectral;
  throw ConfigError("nonlinearity", "expected direct or pseudospectral, got " + name);
}

std::string to_string(Nonlinearity n) { return n == Nonlinearity::direct ? "direct" : "pseudospectral"; }

NonlinearOperator::NonlinearOperator(LatticePtr lattice, Nonlinearity method)
    : lattice_(std::move(lattice)), method_(method) {
  const auto& lat = *lattice_;
  const int d = lat.dim();
  const int n = lat.truncation();
  if (method_ == Nonlinearity::direct) {
    const Index side = 4 * n + 1;
    Index total = 1;
    center_ = 0;
    for (int a = 0; a < d; ++a) {
      center_ += 2 * n * total;
      total *= side;
    }
    diff_box_.assign(static_cast<std::size_t>(total), -1);
    box_of_full_.resize(static_cast<std::size_t>(lat.size()));
    for (Index i = 0; i < lat.size(); ++i) {
      Index code = 0, stride = 1;
      for (int a = 0; a < d; ++a) {
        code += lat.modes()(a, i) * stride;
        stride *= side;
      }
      box_of_full_[static_cast<std::size_t>(i)] = code;
      diff_box_[static_cast<std::size_t>(code + center_)] = i;
    }
    full_k_ = lat.unit() * lat.modes().cast<double>();
  } else {
    grid_ = std::make_unique<GridTransform<double>>(lat, smooth_size(3 * n + 1));
    work_.resize(d == 2 ? 3 : 5);
  }
}

void NonlinearOperator::apply(const Field& u, Field& out) {
  if (!u.lattice().same_modes(*lattice_) || u.lattice().length() != lattice_->length()) {
    throw ConfigError("lattice", "field does not live on the operator's lattice");
  }
  if (out.lattice_ptr() != u.lattice_ptr()) out = Field(u.lattice_ptr());
  auto& c = out.coeffs();
  if (method_ == Nonlinearity::direct) {
    apply_direct(u, c);
  } else {
    apply_grid(u, c);
  }
  out = leray_project(std::move(out));
}

void NonlinearOperator::apply_direct(const Field& u, Field::Coeffs& c) {
  const auto& lat = *lattice_;
  const int d = lat.dim();
  const Index full = lat.size();
  const Field::Coeffs uf = u.to_full();
  const Complex mi(0, -1);
  Eigen::VectorXcd acc(d);
  for (Index h = 0; h < lat.half_size(); ++h) {
    const Index kcode = box_of_full_[static_cast<std::size_t>(lat.half_to_full(h))] + center_;
    acc.setZero();
    for (Index p = 0; p < full; ++p) {
      const Index l = diff_box_[static_cast<std::size_t>(kcode - box_of_full_[static_cast<std::size_t>(p)])];
      if (l < 0) continue;
      Complex dot(0);
      for (int a = 0; a < d; ++a) dot += full_k_(a, l) * uf(a, p);
      acc += dot * uf.col(l);
    }
    c.col(h) = mi * acc;
  }
}

void NonlinearOperator::apply_grid(const Field& u, Field::Coeffs& c) {
  const auto& lat = *lattice_;
  const int d = lat.dim();
  const auto& uc = u.coeffs();
  auto& g = *grid_;
  const std::size_t size = static_cast<std::size_t>(g.size());
  const Complex mi(0, -1);
  GridTransform<double>::Row a, b;

  if (d == 2) {
    g.synthesize(uc.row(0), uc.row(1), work_[0]);
    work_[1].resize(size);
    work_[2].resize(size);
    for (std::size_t x = 0; x < size; ++x) {
      const double u0 = work_[0][x].real(), u1 = work_[0][x].imag();
      work_[1][x] = Complex(u0 * u0, u0 * u1);
      work_[2][x] = Complex(u1 * u1, 0.0);
    }
    Field::Coeffs p(3, lat.half_size());  // 00, 01, 11
    g.analyze(work_[1], a, b);
    p.row(0) = a;
    p.row(1) = b;
    g.analyze(work_[2], a);
    p.row(2) = a;
    for (Index h = 0; h < lat.half_size(); ++h) {
      const double k0 = lat.half_wavevectors()(0, h), k1 = lat.half_wavevectors()(1, h);
      c(0, h) = mi * (k0 * p(0, h) + k1 * p(1, h));
      c(1, h) = mi * (k0 * p(1, h) + k1 * p(2, h));
    }
    return;
  }

  g.synthesize(uc.row(0), uc.row(1), work_[0]);
  g.synthesize(uc.row(2), work_[1]);
  for (int q = 2; q < 5; ++q) work_[static_cast<std::size_t>(q)].resize(size);
  for (std::size_t x = 0; x < size; ++x) {
    const double u0 = work_[0][x].real(), u1 = work_[0][x].imag(), u2 = work_[1][x].real();
    work_[2][x] = Complex(u0 * u0, u0 * u1);
    work_[3][x] = Complex(u0 * u2, u1 * u1);
    work_[4][x] = Complex(u1 * u2, u2 * u2);
  }
  // Symmetric products in the order 00, 01, 02, 11, 12, 22.
  Field::Coeffs p(6, lat.half_size());
  for (int q = 0; q < 3; ++q) {
    g.analyze(work_[static_cast<std::size_t>(q + 2)], a, b);
    p.row(2 * q) = a;
    p.row(2 * q + 1) = b;
  }
  constexpr std::array<std::array<int, 3>, 3> at = {{{0, 1, 2}, {1, 3, 4}, {2, 4, 5}}};
  for (Index h = 0; h < lat.half_size(); ++h) {
    const auto k = lat.half_wavevectors().col(h);
    for (int i = 0; i < 3; ++i) {
      Complex s(0);
      for (int j = 0; j < 3; ++j) s += k(j) * p(at[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], h);
      c(i, h) = mi * s;
    }
  }
}

Field nonlinear_term(const Field& u, Nonlinearity method) {
  NonlinearOperator op(u.lattice_ptr(), method);
  return op(u);
}

}  // namespace k41
