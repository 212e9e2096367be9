#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "sslab/matrix.hpp"
#include "sslab/rng.hpp"

namespace sslab {

/// a × b. Throws ShapeError when a.cols() != b.rows().
[[nodiscard]] Matrix matmul(const Matrix& a, const Matrix& b);

/// a × bᵀ. Throws ShapeError when a.cols() != b.cols().
[[nodiscard]] Matrix matmul_bt(const Matrix& a, const Matrix& b);

/// aᵀ × b. Throws ShapeError when a.rows() != b.rows().
[[nodiscard]] Matrix matmul_at(const Matrix& a, const Matrix& b);

/// Squared Euclidean distance between every pair of rows. Symmetric with an
/// exactly zero diagonal; bitwise independent of the thread count.
[[nodiscard]] Matrix pairwise_sq_dists(const Matrix& x);

[[nodiscard]] double squared_distance(std::span<const double> a, std::span<const double> b);

struct SymmetricEigen {
  std::vector<double> values;  // descending
  Matrix vectors;              // row i is the eigenvector of values[i]
  int sweeps = 0;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Stops when the
/// off-diagonal Frobenius norm falls below `tolerance` times the matrix norm,
/// or after `max_sweeps` sweeps.
[[nodiscard]] SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tolerance = 1e-10,
                                          int max_sweeps = 100);

struct PcaResult {
  Matrix components;                    // d × cols, orthonormal rows
  Matrix projected;                     // rows × d
  std::vector<double> explained_variance;  // d eigenvalues of the covariance
  std::vector<double> mean;
};

/// Principal components by Jacobi eigendecomposition of the sample covariance
/// (denominator rows − 1). Components are sorted by descending variance and
/// each is signed so its largest-magnitude entry is positive.
[[nodiscard]] PcaResult pca(const Matrix& x, std::size_t d);

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central-difference gradient check. Returns
/// maxᵢ |fdᵢ − anᵢ| / max(1e-8, |fdᵢ| + |anᵢ|).
[[nodiscard]] double finite_diff_check(const ScalarFunction& loss, std::span<const double> params,
                                       std::span<const double> analytic_grad, double step);

/// L2-regularized logistic regression fit by full-batch gradient descent.
///
/// Features are centered on their mean and divided by one common RMS scale
/// before fitting; the scale is isotropic so the fitted weight direction is
/// the same in the original coordinates. Weights start at zero.
struct LogisticModel {
  std::vector<double> weights;  // in original feature coordinates
  double bias = 0.0;            // in original feature coordinates

  [[nodiscard]] double decision(std::span<const double> x) const;
  [[nodiscard]] double probability(std::span<const double> x) const;
};

struct LogisticOptions {
  int steps = 2000;
  double learning_rate = 0.1;
  double l2 = 1e-3;
};

/// Fits on rows of `x` with binary `labels` (0/1). Throws DegenerateError when
/// only one class is present.
[[nodiscard]] LogisticModel fit_logistic(const Matrix& x, std::span<const int> labels,
                                         const LogisticOptions& options = {});

[[nodiscard]] inline double sigmoid(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

/// log(1 + eᵗ) without overflow.
[[nodiscard]] inline double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

/// Round each value to the nearest binary32 and back.
void round_to_binary32(std::span<double> values);

}  // namespace sslab
