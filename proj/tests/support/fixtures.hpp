#pragma once

#include <vector>

#include "sslab/matrix.hpp"
#include "sslab/rng.hpp"

namespace fixture {

using sslab::Matrix;
using sslab::Rng;

// Three Gaussian clusters in R¹⁰ with 20 points each.
inline Matrix three_clusters(Rng& rng, std::vector<int>& cluster) {
  Matrix x(60, 10);
  cluster.assign(60, 0);
  for (std::size_t r = 0; r < 60; ++r) {
    cluster[r] = static_cast<int>(r / 20);
    for (std::size_t c = 0; c < 10; ++c) x(r, c) = rng.normal() + (c == static_cast<std::size_t>(cluster[r]) ? 10.0 : 0.0);
  }
  return x;
}

}  // namespace fixture
