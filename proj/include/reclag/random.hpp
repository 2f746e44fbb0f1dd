#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "reclag/core.hpp"

namespace reclag {

using Rng = std::mt19937_64;

/// Uniform point in the open ball of the given radius: Gaussian direction,
/// radius r * u^(1/dim).
inline Vector sample_uniform_ball(Rng& rng, Eigen::Index dim, double radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector dir(dim);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < dim; ++i) dir[i] = normal(rng);
    norm = dir.norm();
  } while (norm == 0.0);
  const double r = radius * std::pow(unif(rng), 1.0 / static_cast<double>(dim));
  return dir * (r / norm);
}

}  // namespace reclag
