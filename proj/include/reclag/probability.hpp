#pragma once

// Density view of a RecLag network: p_H(x, mu) proportional to
// exp(beta xi_mu . x) over a covering ball, its marginal, the memory
// posterior, and the basin of the origin attractor {x : G(x) < 0}.

#include <cstdint>
#include <optional>

#include "reclag/core.hpp"
#include "reclag/dataset.hpp"

namespace reclag {

struct LogPartition {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
};

struct DensityModel {
  InteractionMatrix xi;
  double beta = 1.0;
  double gamma = 1.0;
  double sphere_radius = 1.0;
  std::optional<LogPartition> log_partition;
  /// Target L2 norm applied to features before scoring; 0 disables it.
  double feature_norm = 0.0;

  void validate() const;
  Eigen::Index n_memory() const noexcept { return xi.n_memory(); }
  Eigen::Index n_feature() const noexcept { return xi.n_feature(); }

  /// Applies the feature normalization (identity when feature_norm == 0).
  Vector prepare(const VectorRef& x) const;
};

/// beta xi_mu . x, i.e. log(Z p_H(x, mu)). mu is zero-based.
double log_joint_unnormalized(const DensityModel& model, const VectorRef& x, Eigen::Index mu);

/// p_H(mu | x) = softmax_mu(beta xi x). Independent of gamma and Z.
Vector memory_posterior(const DensityModel& model, const VectorRef& x);

/// log of the volume of the dim-dimensional ball of the given radius.
double log_ball_volume(Eigen::Index dim, double radius);

/// Monte Carlo estimate of log Z by uniform sampling in the covering ball,
/// with the delta-method standard error of the log. beta = 0 is accepted.
LogPartition estimate_log_partition(const DensityModel& model, std::size_t n_samples, std::uint64_t seed);

/// log p_H(x) = log gamma + G(x) - log Z. Requires an estimated partition.
double log_density(const DensityModel& model, const VectorRef& x);

/// True iff G(x) < 0, equivalently p_H(x) < gamma / Z.
bool in_basin(const DensityModel& model, const VectorRef& x);

/// G(x); higher means more in-distribution. Does not need Z.
double ood_score(const DensityModel& model, const VectorRef& x);

/// R = factor * max_i |x_i|_2 over the rows of the dataset.
double covering_radius(const Dataset& data, double factor = 1.5);

/// gamma such that a fraction `tpr` of the given rows satisfies G >= 0, i.e.
/// log gamma is the matching lower quantile of log sum_mu exp(beta xi_mu.x).
/// With vanilla_steps > 0 each row contributes the minimum of that sum over
/// its first vanilla_steps + 1 vanilla states, so the calibrated fraction keeps
/// an open gate along the whole trajectory and follows the vanilla dynamics.
double calibrate_gamma(const DensityModel& model, const Dataset& data, double tpr, std::size_t vanilla_steps = 0);

}  // namespace reclag
