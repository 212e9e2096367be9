#include "sslab/sampler.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "sslab/error.hpp"
#include "sslab/kernels.hpp"
#include "sslab/numkit.hpp"

namespace sslab {

std::string_view to_string(SamplerMethod m) { return m == SamplerMethod::fps ? "fps" : "rs"; }

SamplerMethod parse_sampler(std::string_view s) {
  if (s == "fps" || s == "FPS") return SamplerMethod::fps;
  if (s == "rs" || s == "RS" || s == "random") return SamplerMethod::rs;
  throw ConfigError("unknown sampler '" + std::string(s) + "' (expected fps or rs)");
}

namespace {

void check_k(std::size_t n, std::size_t k) {
  if (k == 0) throw ArgumentError("sampler: k must be at least 1");
  if (k > n) {
    throw ArgumentError("sampler: k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " points");
  }
}

}  // namespace

SelectionResult fps_from(const Matrix& points, std::size_t k, std::size_t start, std::uint64_t seed) {
  const std::size_t n = points.rows();
  check_k(n, k);
  if (start >= n) throw ArgumentError("fps: start index " + std::to_string(start) + " out of range");
  if (!points.all_finite()) throw NumericError("fps: non-finite coordinates");

  SelectionResult res;
  res.method = SamplerMethod::fps;
  res.seed = seed;
  res.indices.push_back(start);
  res.pick_distances.push_back(std::numeric_limits<double>::infinity());

  std::vector<double> min_sq(n, std::numeric_limits<double>::infinity());
  std::vector<char> taken(n, 0);
  taken[start] = 1;
  std::size_t last = start;
  while (res.indices.size() < k) {
    kernels::fps_relax_omp(points, last, min_sq);
    // selected points sit at distance 0 already; -1 keeps them out of reach
    // when every remaining point coincides with a pick
    std::vector<double> score(min_sq);
    for (std::size_t i = 0; i < n; ++i)
      if (taken[i]) score[i] = -1.0;
    last = kernels::argmax_omp(score);
    taken[last] = 1;
    res.indices.push_back(last);
    res.pick_distances.push_back(std::sqrt(min_sq[last]));
  }
  return res;
}

SelectionResult fps(const Matrix& points, std::size_t k, Rng& rng) {
  check_k(points.rows(), k);
  const auto start = static_cast<std::size_t>(rng.below(points.rows()));
  return fps_from(points, k, start, rng.seed());
}

SelectionResult random_select(std::size_t n, std::size_t k, Rng& rng) {
  check_k(n, k);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(perm[i], perm[j]);
  }
  perm.resize(k);
  SelectionResult res;
  res.indices = std::move(perm);
  res.method = SamplerMethod::rs;
  res.seed = rng.seed();
  return res;
}

double covering_radius(const Matrix& points, const std::vector<std::size_t>& selected) {
  double worst = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s : selected) best = std::min(best, squared_distance(points.row(i), points.row(s)));
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

}  // namespace sslab
