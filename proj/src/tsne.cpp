#include "sslab/tsne.hpp"

#include <cmath>
#include <string>

#include "sslab/error.hpp"
#include "sslab/kernels.hpp"
#include "sslab/numkit.hpp"

namespace sslab::tsne {

void TsneConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!(perplexity > 1.0) || !std::isfinite(perplexity)) fail("perplexity must be > 1");
  if (iterations < 1) fail("iterations must be at least 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning-rate must be >= 0");
  if (!(early_exaggeration >= 1.0)) fail("early-exaggeration must be >= 1");
  if (!(momentum_initial >= 0.0 && momentum_initial < 1.0)) fail("momentum-initial must be in [0, 1)");
  if (!(momentum_final >= 0.0 && momentum_final < 1.0)) fail("momentum-final must be in [0, 1)");
  if (out_dim != 2) fail("out-dim must be 2");
}

Matrix calibrate_affinities(const Matrix& sq, double perplexity) {
  const std::size_t n = sq.rows();
  if (sq.cols() != n) throw ShapeError("calibrate_affinities: distance matrix is not square");
  if (n < 3) throw ArgumentError("calibrate_affinities: need at least 3 points");
  if (!sq.all_finite()) throw NumericError("calibrate_affinities: non-finite distances");
  if (!(perplexity > 1.0) || perplexity > static_cast<double>(n - 1) + kPerplexityTolerance) {
    throw ArgumentError("perplexity " + std::to_string(perplexity) + " infeasible for " +
                        std::to_string(n) + " points (must be in (1, " + std::to_string(n - 1) + "])");
  }
  return kernels::calibrate_omp(sq, perplexity, kPerplexityTolerance, kMaxBisectionSteps).conditional;
}

Matrix symmetrize(const Matrix& p) {
  const std::size_t n = p.rows();
  if (p.cols() != n) throw ShapeError("symmetrize: matrix is not square");
  Matrix out(n, n);
  const double denom = 2.0 * static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = (p(i, j) + p(j, i)) / denom;
  return out;
}

KlGrad kl_and_grad(const Matrix& p_sym, const Matrix& y) {
  if (p_sym.rows() != p_sym.cols()) throw ShapeError("kl_and_grad: P is not square");
  for (std::size_t i = 0; i < p_sym.rows(); ++i) {
    if (p_sym(i, i) != 0.0) throw ArgumentError("kl_and_grad: P has a non-zero diagonal");
    for (std::size_t j = i + 1; j < p_sym.cols(); ++j) {
      if (std::abs(p_sym(i, j) - p_sym(j, i)) > 1e-12 * std::max(p_sym(i, j), p_sym(j, i))) {
        throw ArgumentError("kl_and_grad: P is not symmetric");
      }
    }
  }
  auto r = kernels::student_t_kl_grad_omp(p_sym, y, 1.0, kQFloor, kernels::sum_p_log_p(p_sym));
  return {r.kl, std::move(r.grad)};
}

Embedding2D run(const Matrix& x, const TsneConfig& cfg, Rng& rng) {
  return run_from_sq_dists(pairwise_sq_dists(x), cfg, rng);
}

Embedding2D run_from_sq_dists(const Matrix& sq, const TsneConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t n = sq.rows();
  const Matrix p = symmetrize(calibrate_affinities(sq, cfg.perplexity));

  Embedding2D out;
  out.points = Matrix(n, 2);
  for (double& v : out.points.values()) v = rng.normal(0.0, 1e-2);  // variance 1e-4
  Matrix velocity(n, 2, 0.0);
  const double p_log_p = kernels::sum_p_log_p(p);
  out.kl_history.reserve(cfg.iterations);

  auto step_kl = kernels::student_t_kl_grad_omp(
      p, out.points, cfg.exaggeration_iters > 0 ? cfg.early_exaggeration : 1.0, kQFloor, p_log_p);
  out.initial_kl = step_kl.kl;
  for (std::uint32_t it = 0; it < cfg.iterations; ++it) {
    const double momentum = it < cfg.momentum_switch_iter ? cfg.momentum_initial : cfg.momentum_final;
    for (std::size_t k = 0; k < velocity.size(); ++k) {
      velocity.values()[k] = momentum * velocity.values()[k] - cfg.learning_rate * step_kl.grad.values()[k];
      out.points.values()[k] += velocity.values()[k];
    }
    if (!out.points.all_finite()) {
      throw DivergenceError("t-SNE diverged at iteration " + std::to_string(it), it);
    }
    // The next gradient and this iteration's KL share one Q evaluation.
    const double scale = it + 1 < cfg.exaggeration_iters ? cfg.early_exaggeration : 1.0;
    step_kl = kernels::student_t_kl_grad_omp(p, out.points, scale, kQFloor, p_log_p);
    out.kl_history.push_back(step_kl.kl);
  }
  return out;
}

}  // namespace sslab::tsne
