#include "reclag/probability.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "reclag/dynamics.hpp"
#include "reclag/random.hpp"

namespace reclag {

void DensityModel::validate() const {
  detail::require(beta >= 0.0 && std::isfinite(beta), "beta must be a finite non-negative number");
  detail::require(gamma > 0.0 && std::isfinite(gamma), "gamma must be finite and positive");
  detail::require(sphere_radius > 0.0, "sphere radius must be positive");
  detail::require(feature_norm >= 0.0, "feature norm must be non-negative");
  if (log_partition) detail::require(log_partition->std_error >= 0.0, "negative partition std error");
}

Vector DensityModel::prepare(const VectorRef& x) const {
  detail::require_dim(x.size(), n_feature(), "feature vector");
  if (feature_norm == 0.0) return x;
  const double n = x.norm();
  detail::require(n > 0.0, "cannot normalize a zero feature vector");
  return x * (feature_norm / n);
}

double log_joint_unnormalized(const DensityModel& model, const VectorRef& x, Eigen::Index mu) {
  detail::require_dim(x.size(), model.n_feature(), "feature vector");
  if (mu < 0 || mu >= model.n_memory()) {
    throw InvalidArgument("memory index " + std::to_string(mu) + " out of range [0, " +
                          std::to_string(model.n_memory()) + ")");
  }
  return model.beta * model.xi.row(mu).dot(x);
}

Vector memory_posterior(const DensityModel& model, const VectorRef& x) {
  return softmax(Vector(model.beta * model.xi.project(x)));
}

double log_ball_volume(Eigen::Index dim, double radius) {
  const double n = static_cast<double>(dim);
  return 0.5 * n * std::log(std::numbers::pi) - std::lgamma(0.5 * n + 1.0) + n * std::log(radius);
}

LogPartition estimate_log_partition(const DensityModel& model, std::size_t n_samples, std::uint64_t seed) {
  model.validate();
  detail::require(n_samples >= 2, "partition estimate needs at least two samples");

  // Draw the whole sample stream first so the result depends only on the seed.
  Rng rng(seed);
  std::vector<double> log_integrand(n_samples);
  for (auto& w : log_integrand) {
    const Vector x = sample_uniform_ball(rng, model.n_feature(), model.sphere_radius);
    w = stable_log_sum_exp(Vector(model.beta * model.xi.project(x)));
  }

  const double n = static_cast<double>(n_samples);
  const double log_mean = stable_log_sum_exp(std::span<const double>(log_integrand)) - std::log(n);
  const double shift = *std::max_element(log_integrand.begin(), log_integrand.end());
  double mean = 0.0;
  for (double w : log_integrand) mean += std::exp(w - shift);
  mean /= n;
  double var = 0.0;
  for (double w : log_integrand) {
    const double d = std::exp(w - shift) - mean;
    var += d * d;
  }
  var /= (n - 1.0);

  LogPartition out;
  out.estimate = log_ball_volume(model.n_feature(), model.sphere_radius) + log_mean;
  out.std_error = std::sqrt(var / n) / mean;
  out.n_samples = n_samples;
  out.seed = seed;
  return out;
}

double log_density(const DensityModel& model, const VectorRef& x) {
  if (!model.log_partition) throw InvalidArgument("log_density needs an estimated log partition");
  return std::log(model.gamma) + ood_score(model, x) - model.log_partition->estimate;
}

bool in_basin(const DensityModel& model, const VectorRef& x) { return ood_score(model, x) < 0.0; }

double ood_score(const DensityModel& model, const VectorRef& x) {
  return gate_value(model.xi, x, model.beta, model.gamma);
}

double covering_radius(const Dataset& data, double factor) {
  detail::require(!data.empty(), "covering radius of an empty dataset");
  detail::require(factor >= 1.0, "covering factor must be >= 1");
  return factor * data.features.rowwise().norm().maxCoeff();
}

double calibrate_gamma(const DensityModel& model, const Dataset& data, double tpr, std::size_t vanilla_steps) {
  detail::require(tpr > 0.0 && tpr <= 1.0, "tpr must lie in (0, 1]");
  detail::require(!data.empty(), "calibration needs data");
  std::vector<double> lse(static_cast<std::size_t>(data.size()));
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    FeatureState state{model.prepare(data.sample(i)), 0};
    double low = stable_log_sum_exp(Vector(model.beta * model.xi.project(state.v)));
    for (std::size_t k = 0; k < vanilla_steps; ++k) {
      state = vanilla_update(model.xi, state, model.beta);
      low = std::min(low, stable_log_sum_exp(Vector(model.beta * model.xi.project(state.v))));
    }
    lse[static_cast<std::size_t>(i)] = low;
  }
  std::sort(lse.begin(), lse.end(), std::greater<>());
  const double n = static_cast<double>(lse.size());
  std::size_t k = 1;
  while (static_cast<double>(k) / n < tpr) ++k;
  return std::exp(lse[k - 1]);
}

}  // namespace reclag
