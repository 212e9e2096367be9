#include "sslab/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sslab/error.hpp"
#include "sslab/kernels.hpp"

namespace sslab {

namespace {

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: " + dims(a) + " × " + dims(b));
  Matrix c(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_bt: " + dims(a) + " × " + dims(b) + "ᵀ");
  Matrix c(a.rows(), b.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto brow = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < arow.size(); ++k) s += arow[k] * brow[k];
      c(i, j) = s;
    }
  }
  return c;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_at: " + dims(a) + "ᵀ × " + dims(b));
  Matrix c(a.cols(), b.cols(), 0.0);
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto arow = a.row(k);
    const auto brow = b.row(k);
    for (std::size_t i = 0; i < arow.size(); ++i) {
      const double v = arow[i];
      if (v == 0.0) continue;
      auto out = c.row(i);
      for (std::size_t j = 0; j < brow.size(); ++j) out[j] += v * brow[j];
    }
  }
  return c;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

Matrix pairwise_sq_dists(const Matrix& x) {
  if (x.rows() == 0) throw ShapeError("pairwise_sq_dists: no rows");
  if (!x.all_finite()) throw NumericError("pairwise_sq_dists: non-finite input");
  return kernels::pairwise_sq_dists_omp(x);
}

SymmetricEigen jacobi_eigen(const Matrix& symmetric, double tolerance, int max_sweeps) {
  const std::size_t n = symmetric.rows();
  if (symmetric.cols() != n) throw ShapeError("jacobi_eigen: matrix is " + dims(symmetric));
  Matrix a = symmetric;
  Matrix v = Matrix::identity(n);

  double total = 0.0;
  for (double x : a.values()) total += x * x;
  const double threshold = tolerance * std::sqrt(total);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) s += 2.0 * a(p, q) * a(p, q);
    return std::sqrt(s);
  };

  SymmetricEigen out;
  bool converged = n < 2 || off_norm() <= threshold;
  while (!converged && out.sweeps < max_sweeps) {
    ++out.sweeps;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        // columns of v accumulate the rotations
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    converged = off_norm() <= threshold;
  }
  if (!converged) {
    throw NumericError("jacobi_eigen: no convergence after " + std::to_string(max_sweeps) +
                       " sweeps");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return a(l, l) > a(r, r); });
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(k, r) = v(r, order[k]);
  }
  return out;
}

PcaResult pca(const Matrix& x, std::size_t d) {
  const std::size_t n = x.rows();
  const std::size_t m = x.cols();
  if (d > m) throw ShapeError("pca: requested " + std::to_string(d) + " of " + std::to_string(m) + " dimensions");
  if (d == 0) throw ArgumentError("pca: d must be positive");
  if (n < 2) throw ShapeError("pca: needs at least 2 rows");
  if (!x.all_finite()) throw NumericError("pca: non-finite input");

  PcaResult res;
  res.mean.assign(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) res.mean[j] += x(i, j);
  for (double& mu : res.mean) mu /= static_cast<double>(n);

  Matrix centered(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) centered(i, j) = x(i, j) - res.mean[j];

  Matrix cov = matmul_at(centered, centered);
  double trace = 0.0;
  for (std::size_t j = 0; j < m; ++j) trace += cov(j, j);
  if (!(trace > 0.0)) throw DegenerateError("pca: data has zero variance");
  for (double& c : cov.values()) c /= static_cast<double>(n - 1);

  const SymmetricEigen eig = jacobi_eigen(cov, 1e-10, 100);
  res.components = Matrix(d, m);
  res.explained_variance.assign(eig.values.begin(), eig.values.begin() + static_cast<std::ptrdiff_t>(d));
  for (std::size_t k = 0; k < d; ++k) {
    const auto src = eig.vectors.row(k);
    std::size_t big = 0;
    for (std::size_t j = 1; j < m; ++j)
      if (std::abs(src[j]) > std::abs(src[big])) big = j;
    const double sign = src[big] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < m; ++j) res.components(k, j) = sign * src[j];
  }
  res.projected = matmul_bt(centered, res.components);
  return res;
}

double finite_diff_check(const ScalarFunction& loss, std::span<const double> params,
                         std::span<const double> analytic_grad, double step) {
  if (!(step > 0.0)) throw ArgumentError("finite_diff_check: step must be positive");
  if (params.size() != analytic_grad.size())
    throw ShapeError("finite_diff_check: gradient length differs from parameter length");
  std::vector<double> probe(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + step;
    const double up = loss(probe);
    probe[i] = saved - step;
    const double down = loss(probe);
    probe[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw NumericError("finite_diff_check: non-finite loss at coordinate " + std::to_string(i));
    const double fd = (up - down) / (2.0 * step);
    const double err =
        std::abs(fd - analytic_grad[i]) / std::max(1e-8, std::abs(fd) + std::abs(analytic_grad[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

double LogisticModel::decision(std::span<const double> x) const {
  double s = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * x[j];
  return s;
}

double LogisticModel::probability(std::span<const double> x) const { return sigmoid(decision(x)); }

LogisticModel fit_logistic(const Matrix& x, std::span<const int> labels,
                           const LogisticOptions& options) {
  const std::size_t n = x.rows();
  const std::size_t m = x.cols();
  if (labels.size() != n) throw ShapeError("fit_logistic: label count differs from row count");
  std::size_t positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw ArgumentError("fit_logistic: labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  if (positives == 0 || positives == n) throw DegenerateError("fit_logistic: labels contain a single class");

  std::vector<double> mean(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) mean[j] += x(i, j);
  for (double& mu : mean) mu /= static_cast<double>(n);
  Matrix z(n, m);
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      z(i, j) = x(i, j) - mean[j];
      sq += z(i, j) * z(i, j);
    }
  }
  double scale = m == 0 ? 0.0 : std::sqrt(sq / static_cast<double>(n * m));
  if (!(scale > 0.0)) scale = 1.0;
  for (double& v : z.values()) v /= scale;

  std::vector<double> w(m, 0.0);
  double b = 0.0;
  std::vector<double> gw(m);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int step = 0; step < options.steps; ++step) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = z.row(i);
      double t = b;
      for (std::size_t j = 0; j < m; ++j) t += w[j] * row[j];
      const double r = (sigmoid(t) - static_cast<double>(labels[i])) * inv_n;
      gb += r;
      for (std::size_t j = 0; j < m; ++j) gw[j] += r * row[j];
    }
    for (std::size_t j = 0; j < m; ++j) w[j] -= options.learning_rate * (gw[j] + options.l2 * w[j]);
    b -= options.learning_rate * gb;
  }

  LogisticModel model;
  model.weights.resize(m);
  model.bias = b;
  for (std::size_t j = 0; j < m; ++j) {
    model.weights[j] = w[j] / scale;
    model.bias -= model.weights[j] * mean[j];
  }
  return model;
}

void round_to_binary32(std::span<double> values) {
  for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace sslab
