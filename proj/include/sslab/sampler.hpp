#pragma once

// Representative selection on an embedding.

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "sslab/matrix.hpp"
#include "sslab/rng.hpp"

namespace sslab {

enum class SamplerMethod { fps, rs };

[[nodiscard]] std::string_view to_string(SamplerMethod m);
/// Accepts "fps" and "rs" (also upper case). Throws ConfigError otherwise.
[[nodiscard]] SamplerMethod parse_sampler(std::string_view s);

struct SelectionResult {
  std::vector<std::size_t> indices;  // in pick order
  SamplerMethod method = SamplerMethod::fps;
  std::uint64_t seed = 0;
  /// FPS only: distance from each pick to the picks before it (first is +inf).
  std::vector<double> pick_distances;

  friend bool operator==(const SelectionResult&, const SelectionResult&) = default;
};

/// Greedy farthest point sampling. The first index is rng.below(n); each
/// later pick maximizes the Euclidean distance to the nearest earlier pick,
/// ties going to the lowest index.
[[nodiscard]] SelectionResult fps(const Matrix& points, std::size_t k, Rng& rng);
/// As fps() but starting from `start`; rng is only recorded, not consumed.
[[nodiscard]] SelectionResult fps_from(const Matrix& points, std::size_t k, std::size_t start,
                                       std::uint64_t seed = 0);

/// k distinct indices from 0..n−1: the first k slots of a Fisher–Yates shuffle.
[[nodiscard]] SelectionResult random_select(std::size_t n, std::size_t k, Rng& rng);

/// max over points of the distance to the nearest selected point.
[[nodiscard]] double covering_radius(const Matrix& points, const std::vector<std::size_t>& selected);

}  // namespace sslab
