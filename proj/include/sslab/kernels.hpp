#pragma once

// Data-parallel inner loops. Every kernel has a serial reference and an
// OpenMP variant; the two produce bitwise-identical results for any thread
// count because reductions are accumulated per row and then summed in row
// order.

#include <cstddef>
#include <span>
#include <vector>

#include "sslab/matrix.hpp"

namespace sslab::kernels {

/// Sets the OpenMP team size used by the *_omp kernels. Returns the previous value.
int set_threads(int threads);
[[nodiscard]] int threads();

[[nodiscard]] Matrix pairwise_sq_dists_serial(const Matrix& x);
[[nodiscard]] Matrix pairwise_sq_dists_omp(const Matrix& x);

struct Calibration {
  Matrix conditional;          // row-stochastic, zero diagonal
  std::vector<double> beta;    // per-row precision 1/(2σ²)
  std::vector<double> perplexity;
};

/// Per-row Gaussian conditionals whose perplexity matches `perplexity`
/// within `tolerance`. Throws CalibrationError naming the lowest failing row.
[[nodiscard]] Calibration calibrate_serial(const Matrix& sq_dists, double perplexity,
                                           double tolerance, int max_steps);
[[nodiscard]] Calibration calibrate_omp(const Matrix& sq_dists, double perplexity,
                                        double tolerance, int max_steps);

struct KlGradient {
  double kl = 0.0;
  Matrix grad;
};

/// Σ pᵢⱼ log pᵢⱼ over i ≠ j with 0·log 0 = 0.
[[nodiscard]] double sum_p_log_p(const Matrix& p);

/// KL(P‖Q) for Student-t Q on `y` and its gradient with P scaled by
/// `grad_p_scale` (early exaggeration). P must be symmetric with a zero
/// diagonal; y must be n×2. The KL term always uses unscaled P;
/// `p_log_p` must be sum_p_log_p(p), hoisted because P is fixed during a run.
[[nodiscard]] KlGradient student_t_kl_grad_serial(const Matrix& p, const Matrix& y,
                                                  double grad_p_scale, double q_floor,
                                                  double p_log_p);
[[nodiscard]] KlGradient student_t_kl_grad_omp(const Matrix& p, const Matrix& y,
                                               double grad_p_scale, double q_floor,
                                               double p_log_p);

/// min_sq[i] = min(min_sq[i], ‖xᵢ − x_picked‖²).
void fps_relax_serial(const Matrix& x, std::size_t picked, std::span<double> min_sq);
void fps_relax_omp(const Matrix& x, std::size_t picked, std::span<double> min_sq);

/// Index of the largest value; the lowest index wins ties.
[[nodiscard]] std::size_t argmax_serial(std::span<const double> values);
[[nodiscard]] std::size_t argmax_omp(std::span<const double> values);

}  // namespace sslab::kernels
