#include "sslab/kernels.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "sslab/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sslab::kernels {

namespace {

int g_threads = 1;

using Index = std::ptrdiff_t;  // OpenMP loop counters must be signed

double row_pair_sq(const Matrix& x, std::size_t i, std::size_t j) {
  const auto a = x.row(i);
  const auto b = x.row(j);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

void fill_dist_row(const Matrix& x, std::size_t i, Matrix& out) {
  for (std::size_t j = i + 1; j < x.rows(); ++j) {
    const double s = row_pair_sq(x, i, j);
    out(i, j) = s;
    out(j, i) = s;
  }
}

struct RowFit {
  double beta = 0.0;
  double perplexity = 0.0;
  bool ok = false;
};

// Perplexity of the Gaussian conditional over `shifted` at precision beta,
// writing unnormalized weights into `w`.
double row_perplexity(std::span<const double> shifted, std::size_t skip, double beta,
                      std::span<double> w) {
  double sum = 0.0;
  double weighted = 0.0;
  for (std::size_t j = 0; j < shifted.size(); ++j) {
    if (j == skip) {
      w[j] = 0.0;
      continue;
    }
    w[j] = std::exp(-beta * shifted[j]);
    sum += w[j];
    weighted += w[j] * shifted[j];
  }
  const double entropy = std::log(sum) + beta * weighted / sum;
  return std::exp(entropy);
}

RowFit calibrate_row(const Matrix& sq, std::size_t i, double target, double tolerance,
                     int max_steps, std::span<double> out_row) {
  const std::size_t n = sq.cols();
  std::vector<double> shifted(n, 0.0);
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    if (j != i) dmin = std::min(dmin, sq(i, j));
  }
  double mean = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    shifted[j] = sq(i, j) - dmin;
    mean += shifted[j];
  }
  mean /= static_cast<double>(n - 1);

  RowFit fit;
  double beta = 0.0;
  double perp = row_perplexity(shifted, i, beta, out_row);
  if (std::abs(perp - target) > tolerance && mean > 0.0) {
    const double goal = 0.1 * tolerance;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    beta = 1.0 / mean;
    // Bracket expansion does not count against the bisection budget.
    for (int expand = 0; expand < 1100; ++expand) {
      perp = row_perplexity(shifted, i, beta, out_row);
      if (perp <= target) break;
      lo = beta;
      beta *= 2.0;
      if (!std::isfinite(beta)) break;
    }
    if (perp <= target) hi = beta;
    for (int step = 0; step < max_steps && std::abs(perp - target) > goal &&
                       std::isfinite(hi);
         ++step) {
      beta = 0.5 * (lo + hi);
      perp = row_perplexity(shifted, i, beta, out_row);
      if (perp > target) {
        lo = beta;
      } else {
        hi = beta;
      }
    }
  }
  double sum = 0.0;
  for (double v : out_row) sum += v;
  for (double& v : out_row) v /= sum;
  fit.beta = beta;
  fit.perplexity = perp;
  fit.ok = std::isfinite(perp) && std::abs(perp - target) <= tolerance;
  return fit;
}

Calibration finish_calibration(Matrix cond, std::vector<RowFit> fits, double target) {
  Calibration c;
  c.conditional = std::move(cond);
  c.beta.resize(fits.size());
  c.perplexity.resize(fits.size());
  for (std::size_t i = 0; i < fits.size(); ++i) {
    if (!fits[i].ok) {
      throw CalibrationError("perplexity " + std::to_string(target) +
                                 " not reachable for row " + std::to_string(i) +
                                 " (closest " + std::to_string(fits[i].perplexity) + ")",
                             i);
    }
    c.beta[i] = fits[i].beta;
    c.perplexity[i] = fits[i].perplexity;
  }
  return c;
}

// Fills row i of num with (1 + ‖yᵢ − yⱼ‖²)⁻¹ (zero on the diagonal) and
// returns its sum.
double row_numerators(const Matrix& y, std::size_t i, Matrix& num) {
  const std::size_t n = y.rows();
  const double yi0 = y(i, 0);
  const double yi1 = y(i, 1);
  double* out = num.row(i).data();
  const double* yd = y.values().data();
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d0 = yi0 - yd[2 * j];
    const double d1 = yi1 - yd[2 * j + 1];
    out[j] = 1.0 / (1.0 + d0 * d0 + d1 * d1);
  }
  out[i] = 0.0;
  for (std::size_t j = 0; j < n; ++j) sum += out[j];
  return sum;
}

// Gradient for row i, and the cross-entropy −Σ_{j>i} 2·pᵢⱼ log qᵢⱼ (P is
// symmetric, so the upper triangle carries the whole sum).
double row_kl_grad(const Matrix& p, const Matrix& y, const Matrix& num, std::size_t i, double z,
                   double scale, double q_floor, Matrix& grad) {
  const std::size_t n = y.rows();
  const double inv_z = 1.0 / z;
  const double log_z = std::log(z);
  const double log_floor = std::log(q_floor);
  const double* nr = num.row(i).data();
  const double* pr = p.row(i).data();
  const double* yd = y.values().data();
  const double yi0 = y(i, 0);
  const double yi1 = y(i, 1);
  double g0 = 0.0;
  double g1 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double q = std::max(nr[j] * inv_z, q_floor);
    const double mult = (scale * pr[j] - q) * nr[j];
    g0 += mult * (yi0 - yd[2 * j]);
    g1 += mult * (yi1 - yd[2 * j + 1]);
  }
  double cross = 0.0;
  for (std::size_t j = i + 1; j < n; ++j) {
    if (pr[j] > 0.0) cross -= pr[j] * std::max(std::log(nr[j]) - log_z, log_floor);
  }
  grad(i, 0) = 4.0 * g0;
  grad(i, 1) = 4.0 * g1;
  return 2.0 * cross;
}

void check_kl_inputs(const Matrix& p, const Matrix& y) {
  if (p.rows() != p.cols() || p.rows() != y.rows() || y.cols() != 2) {
    throw ShapeError("kl_and_grad: P must be n×n and y n×2");
  }
  if (!y.all_finite()) throw NumericError("kl_and_grad: non-finite embedding");
}

}  // namespace

int set_threads(int t) {
  const int prev = g_threads;
  g_threads = t < 1 ? 1 : t;
  return prev;
}

int threads() { return g_threads; }

Matrix pairwise_sq_dists_serial(const Matrix& x) {
  Matrix out(x.rows(), x.rows(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) fill_dist_row(x, i, out);
  return out;
}

Matrix pairwise_sq_dists_omp(const Matrix& x) {
  Matrix out(x.rows(), x.rows(), 0.0);
  const Index n = static_cast<Index>(x.rows());
#pragma omp parallel for schedule(dynamic, 8) num_threads(g_threads)
  for (Index i = 0; i < n; ++i) fill_dist_row(x, static_cast<std::size_t>(i), out);
  return out;
}

Calibration calibrate_serial(const Matrix& sq, double perplexity, double tolerance,
                             int max_steps) {
  const std::size_t n = sq.rows();
  Matrix cond(n, n, 0.0);
  std::vector<RowFit> fits(n);
  for (std::size_t i = 0; i < n; ++i) {
    fits[i] = calibrate_row(sq, i, perplexity, tolerance, max_steps, cond.row(i));
  }
  return finish_calibration(std::move(cond), std::move(fits), perplexity);
}

Calibration calibrate_omp(const Matrix& sq, double perplexity, double tolerance,
                          int max_steps) {
  const std::size_t n = sq.rows();
  Matrix cond(n, n, 0.0);
  std::vector<RowFit> fits(n);
  const Index count = static_cast<Index>(n);
#pragma omp parallel for schedule(dynamic, 4) num_threads(g_threads)
  for (Index i = 0; i < count; ++i) {
    const auto r = static_cast<std::size_t>(i);
    fits[r] = calibrate_row(sq, r, perplexity, tolerance, max_steps, cond.row(r));
  }
  return finish_calibration(std::move(cond), std::move(fits), perplexity);
}

double sum_p_log_p(const Matrix& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t j = 0; j < p.cols(); ++j)
      if (i != j && p(i, j) > 0.0) s += p(i, j) * std::log(p(i, j));
  return s;
}

KlGradient student_t_kl_grad_serial(const Matrix& p, const Matrix& y, double scale,
                                    double q_floor, double p_log_p) {
  check_kl_inputs(p, y);
  const std::size_t n = y.rows();
  Matrix num(n, n, 0.0);
  std::vector<double> row_sum(n);
  for (std::size_t i = 0; i < n; ++i) row_sum[i] = row_numerators(y, i, num);
  double z = 0.0;
  for (double s : row_sum) z += s;

  KlGradient out{p_log_p, Matrix(n, 2, 0.0)};
  std::vector<double> row_kl(n);
  for (std::size_t i = 0; i < n; ++i) {
    row_kl[i] = row_kl_grad(p, y, num, i, z, scale, q_floor, out.grad);
  }
  for (double k : row_kl) out.kl += k;
  return out;
}

KlGradient student_t_kl_grad_omp(const Matrix& p, const Matrix& y, double scale,
                                 double q_floor, double p_log_p) {
  check_kl_inputs(p, y);
  const std::size_t n = y.rows();
  const Index count = static_cast<Index>(n);
  Matrix num(n, n, 0.0);
  std::vector<double> row_sum(n);
#pragma omp parallel for schedule(static) num_threads(g_threads)
  for (Index i = 0; i < count; ++i) {
    const auto r = static_cast<std::size_t>(i);
    row_sum[r] = row_numerators(y, r, num);
  }
  double z = 0.0;
  for (double s : row_sum) z += s;

  KlGradient out{p_log_p, Matrix(n, 2, 0.0)};
  std::vector<double> row_kl(n);
#pragma omp parallel for schedule(dynamic, 16) num_threads(g_threads)
  for (Index i = 0; i < count; ++i) {
    const auto r = static_cast<std::size_t>(i);
    row_kl[r] = row_kl_grad(p, y, num, r, z, scale, q_floor, out.grad);
  }
  for (double k : row_kl) out.kl += k;
  return out;
}

void fps_relax_serial(const Matrix& x, std::size_t picked, std::span<double> min_sq) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    min_sq[i] = std::min(min_sq[i], row_pair_sq(x, i, picked));
  }
}

void fps_relax_omp(const Matrix& x, std::size_t picked, std::span<double> min_sq) {
  const Index n = static_cast<Index>(x.rows());
#pragma omp parallel for schedule(static) num_threads(g_threads)
  for (Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    min_sq[r] = std::min(min_sq[r], row_pair_sq(x, r, picked));
  }
}

std::size_t argmax_serial(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t argmax_omp(std::span<const double> values) {
  const Index n = static_cast<Index>(values.size());
  int teams = 1;
#ifdef _OPENMP
  teams = g_threads;
#endif
  std::vector<std::size_t> local(static_cast<std::size_t>(teams), 0);
  std::vector<char> seen(static_cast<std::size_t>(teams), 0);
#pragma omp parallel num_threads(teams)
  {
    int tid = 0;
#ifdef _OPENMP
    tid = omp_get_thread_num();
#endif
    auto& best = local[static_cast<std::size_t>(tid)];
    bool have = false;
    // static schedule: each thread owns one contiguous ascending block
#pragma omp for schedule(static)
    for (Index i = 0; i < n; ++i) {
      const auto r = static_cast<std::size_t>(i);
      if (!have || values[r] > values[best]) {
        best = r;
        have = true;
      }
    }
    seen[static_cast<std::size_t>(tid)] = have ? 1 : 0;
  }
  std::size_t best = 0;
  bool have = false;
  for (std::size_t t = 0; t < local.size(); ++t) {
    if (!seen[t]) continue;
    if (!have || values[local[t]] > values[best]) {
      best = local[t];
      have = true;
    }
  }
  return best;
}

}  // namespace sslab::kernels
