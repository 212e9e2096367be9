#pragma once

// Exact O(n²) t-SNE into two dimensions.

#include <cstdint>
#include <vector>

#include "sslab/matrix.hpp"
#include "sslab/rng.hpp"

namespace sslab::tsne {

struct TsneConfig {
  double perplexity = 10.0;
  std::uint32_t iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  std::uint32_t exaggeration_iters = 250;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  std::uint32_t momentum_switch_iter = 250;
  std::uint32_t out_dim = 2;

  /// Static checks; the perplexity/n relation is checked by run().
  void validate() const;

  friend bool operator==(const TsneConfig&, const TsneConfig&) = default;
};

struct Embedding2D {
  Matrix points;                   // n × 2
  double initial_kl = 0.0;         // at the random initialization
  std::vector<double> kl_history;  // after each iteration, unexaggerated P
};

constexpr double kPerplexityTolerance = 1e-3;
constexpr int kMaxBisectionSteps = 64;
constexpr double kQFloor = 1e-12;

/// Row-stochastic Gaussian conditionals with per-row bandwidth calibrated to
/// `perplexity`. Throws ArgumentError when perplexity > n − 1 (the uniform row
/// maximum) and CalibrationError when a row cannot reach it.
[[nodiscard]] Matrix calibrate_affinities(const Matrix& sq_dists, double perplexity);

/// (P + Pᵀ) / (2n).
[[nodiscard]] Matrix symmetrize(const Matrix& p);

struct KlGrad {
  double kl = 0.0;
  Matrix grad;
};

[[nodiscard]] KlGrad kl_and_grad(const Matrix& p_sym, const Matrix& y);

/// Embeds the rows of `x` (raw features, distances computed internally).
[[nodiscard]] Embedding2D run(const Matrix& x, const TsneConfig& cfg, Rng& rng);
/// Embeds from a precomputed squared-distance matrix.
[[nodiscard]] Embedding2D run_from_sq_dists(const Matrix& sq_dists, const TsneConfig& cfg, Rng& rng);

}  // namespace sslab::tsne
