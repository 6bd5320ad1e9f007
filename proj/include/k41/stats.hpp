#pragma once

#include "k41/lattice.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace k41 {

/// Time average of one scalar with its batch-means standard error.
struct Moment {
  double mean = 0;
  double std_error = 0;
  std::int64_t samples = 0;
  Eigen::VectorXd batches;  ///< per-batch means; empty for exact values

  static Moment exact(double value) {
    Moment m;
    m.mean = value;
    return m;
  }
};

/// Accumulates a sample stream into a fixed number of consecutive batches.
///
/// Sample i of N lands in batch floor(i·B/N), so the batch partition depends
/// only on the planned count.
class BatchAccumulator {
 public:
  BatchAccumulator(Index width, int batches, std::int64_t planned);

  void add(std::int64_t index, const Eigen::Ref<const Eigen::VectorXd>& x);
  std::int64_t count() const noexcept { return count_; }
  int batches() const noexcept { return b_; }

  /// Overall mean per component.
  Eigen::VectorXd mean() const;
  /// Batch means, one column per batch.
  Eigen::MatrixXd batch_means() const;
  /// sd(batch means)/sqrt(B) per component.
  Eigen::VectorXd std_error() const;

 private:
  Index width_;
  int b_;
  std::int64_t planned_;
  std::int64_t count_ = 0;
  Eigen::MatrixXd sums_;
  Eigen::VectorXd counts_;
};

/// Batch standard error of a vector of batch means.
double batch_stderr(const Eigen::Ref<const Eigen::VectorXd>& means);

/// Stationary statistics of one run (or an exact stand-in).
struct EnsembleStats {
  LatticePtr lattice;
  Eigen::VectorXd mode_m2;          ///< E‖û(k)‖² per canonical mode (same value at −k)
  Eigen::VectorXd mode_m2_stderr;
  Eigen::MatrixXd mode_m2_batches;  ///< canonical mode × batch; empty for exact values
  Moment energy, grad_sq, hess_sq, curl_grad_sq, mean_stretch, stretch_l2_sq;
  std::int64_t samples = 0;
  double nu = 0, length = 0, amp = 0;

  /// E‖û(k)‖² at a full-lattice index.
  double m2(Index full) const {
    bool conj = false;
    return mode_m2(lattice->full_to_half(full, conj));
  }
  int batches() const noexcept { return static_cast<int>(mode_m2_batches.cols()); }
};

/// Stats built from exact mode moments: scalars follow from the moments.
EnsembleStats exact_stats(LatticePtr lattice, Eigen::VectorXd mode_m2, double nu, double amp);

/// Pools independent runs in the given order; batches are concatenated.
EnsembleStats merge_stats(const std::vector<EnsembleStats>& parts);

}  // namespace k41
