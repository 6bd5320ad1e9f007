#include "k41/stats.hpp"

#include "k41/error.hpp"

#include <cmath>

namespace k41 {

BatchAccumulator::BatchAccumulator(Index width, int batches, std::int64_t planned)
    : width_(width), b_(batches), planned_(planned) {
  if (batches < 2) throw ConfigError("batches", "at least two batches are needed");
  if (planned < batches) throw ConfigError("samples", "fewer samples than batches");
  sums_ = Eigen::MatrixXd::Zero(width, batches);
  counts_ = Eigen::VectorXd::Zero(batches);
}

void BatchAccumulator::add(std::int64_t index, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const auto b = static_cast<Index>(std::min<std::int64_t>(index * b_ / planned_, b_ - 1));
  sums_.col(b) += x;
  counts_(b) += 1;
  ++count_;
}

Eigen::VectorXd BatchAccumulator::mean() const {
  if (count_ == 0) return Eigen::VectorXd::Zero(width_);
  return sums_.rowwise().sum() / static_cast<double>(count_);
}

Eigen::MatrixXd BatchAccumulator::batch_means() const {
  Eigen::MatrixXd m(width_, b_);
  for (int b = 0; b < b_; ++b) m.col(b) = counts_(b) > 0 ? Eigen::VectorXd(sums_.col(b) / counts_(b)) : Eigen::VectorXd::Zero(width_);
  return m;
}

Eigen::VectorXd BatchAccumulator::std_error() const {
  const Eigen::MatrixXd m = batch_means();
  Eigen::VectorXd se(width_);
  for (Index i = 0; i < width_; ++i) se(i) = batch_stderr(m.row(i).transpose());
  return se;
}

double batch_stderr(const Eigen::Ref<const Eigen::VectorXd>& means) {
  const Index b = means.size();
  if (b < 2) return 0.0;
  const double mu = means.mean();
  const double var = (means.array() - mu).square().sum() / static_cast<double>(b - 1);
  return std::sqrt(var / static_cast<double>(b));
}

EnsembleStats exact_stats(LatticePtr lattice, Eigen::VectorXd mode_m2, double nu, double amp) {
  if (mode_m2.size() != lattice->half_size()) throw ConfigError("mode_m2", "one moment per canonical mode required");
  EnsembleStats s;
  s.lattice = lattice;
  s.mode_m2 = std::move(mode_m2);
  s.mode_m2_stderr = Eigen::VectorXd::Zero(s.mode_m2.size());
  s.nu = nu;
  s.length = lattice->length();
  s.amp = amp;
  const auto& k2 = lattice->half_k2();
  // Divergence-free moments: |k×û|² = |k|²‖û‖², so curl_grad_sq = hess_sq.
  s.energy = Moment::exact(2 * s.mode_m2.sum());
  s.grad_sq = Moment::exact(2 * k2.dot(s.mode_m2));
  s.hess_sq = Moment::exact(2 * k2.cwiseProduct(k2).dot(s.mode_m2));
  s.curl_grad_sq = s.hess_sq;
  s.mean_stretch = Moment::exact(0);
  s.stretch_l2_sq = Moment::exact(0);
  return s;
}

namespace {

Moment merge_moment(const std::vector<const Moment*>& parts) {
  Moment out;
  double total = 0;
  std::vector<double> batches;
  for (const auto* m : parts) {
    total += m->mean * static_cast<double>(m->samples);
    out.samples += m->samples;
    for (Index b = 0; b < m->batches.size(); ++b) batches.push_back(m->batches(b));
  }
  out.mean = out.samples > 0 ? total / static_cast<double>(out.samples) : 0.0;
  out.batches = Eigen::Map<Eigen::VectorXd>(batches.data(), static_cast<Index>(batches.size()));
  out.std_error = batch_stderr(out.batches);
  return out;
}

}  // namespace

EnsembleStats merge_stats(const std::vector<EnsembleStats>& parts) {
  if (parts.empty()) throw ConfigError("stats", "nothing to merge");
  EnsembleStats out;
  out.lattice = parts.front().lattice;
  out.nu = parts.front().nu;
  out.length = parts.front().length;
  out.amp = parts.front().amp;
  const Index h = out.lattice->half_size();
  Eigen::VectorXd weighted = Eigen::VectorXd::Zero(h);
  Index nb = 0;
  for (const auto& p : parts) {
    if (!(*p.lattice == *out.lattice)) throw ConfigError("lattice", "cannot merge stats from different lattices");
    weighted += p.mode_m2 * static_cast<double>(p.samples);
    out.samples += p.samples;
    nb += p.mode_m2_batches.cols();
  }
  out.mode_m2 = out.samples > 0 ? Eigen::VectorXd(weighted / static_cast<double>(out.samples)) : weighted;
  out.mode_m2_batches.resize(h, nb);
  Index at = 0;
  for (const auto& p : parts) {
    out.mode_m2_batches.middleCols(at, p.mode_m2_batches.cols()) = p.mode_m2_batches;
    at += p.mode_m2_batches.cols();
  }
  out.mode_m2_stderr.resize(h);
  for (Index i = 0; i < h; ++i) out.mode_m2_stderr(i) = batch_stderr(out.mode_m2_batches.row(i).transpose());

  auto pick = [&](Moment EnsembleStats::*field) {
    std::vector<const Moment*> ms;
    for (const auto& p : parts) ms.push_back(&(p.*field));
    return merge_moment(ms);
  };
  out.energy = pick(&EnsembleStats::energy);
  out.grad_sq = pick(&EnsembleStats::grad_sq);
  out.hess_sq = pick(&EnsembleStats::hess_sq);
  out.curl_grad_sq = pick(&EnsembleStats::curl_grad_sq);
  out.mean_stretch = pick(&EnsembleStats::mean_stretch);
  out.stretch_l2_sq = pick(&EnsembleStats::stretch_l2_sq);
  return out;
}

}  // namespace k41
