#pragma once

// Training of the interaction matrix by probabilistic interaction: each
// feature x picks a memory index mu ~ p_H(mu|x) and re-emits x through a
// diagonal Gaussian centred on xi_mu. The trainer ascends the per-sample
// log of sum_mu p_V(x|mu) p_H(mu|x).

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

#include "reclag/core.hpp"
#include "reclag/dataset.hpp"
#include "reclag/probability.hpp"
#include "reclag/random.hpp"

namespace reclag {

/// Diagonal covariance shared by all memories, stored as log-variances.
struct GaussianEmission {
  Vector log_variances;

  Vector variances() const { return log_variances.array().exp().matrix(); }
};

namespace init {
/// N_H rows drawn from the normalized data (without replacement when possible).
struct FromDataRows {};
/// i.i.d. N(0, scale^2) entries.
struct GaussianNoise {
  double scale = 1.0;
};
}  // namespace init

using TrainerInit = std::variant<init::FromDataRows, init::GaussianNoise>;

enum class Estimator {
  Auto,     ///< Exact when n_memory <= exact_max_memory, otherwise Sampled.
  Exact,    ///< Full enumeration over memory indices.
  Sampled,  ///< mc_samples indices drawn from the posterior, self-normalized.
};

struct TrainerConfig {
  std::size_t epochs = 100;
  double learning_rate = 0.05;
  std::size_t mc_samples = 5;
  double beta = 5.0;
  std::optional<double> gamma;  ///< defaults to 2 * n_memory
  Eigen::Index n_memory = 250;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  TrainerInit init = init::FromDataRows{};
  double feature_norm_target = 10.0;
  Estimator estimator = Estimator::Auto;
  Eigen::Index exact_max_memory = 64;

  void validate() const;
  double resolved_gamma() const { return gamma.value_or(2.0 * static_cast<double>(n_memory)); }
};

/// Parameters the objective depends on.
struct TrainState {
  Matrix xi;
  GaussianEmission emission;
  double beta = 1.0;
};

struct ObjectiveGradient {
  double mean_log_objective = 0.0;  ///< mean over the batch of log P(x)
  Matrix d_xi;                      ///< gradient of mean_log_objective
  Vector d_log_variances;
};

struct TrainResult {
  DensityModel model;
  GaussianEmission emission;
  std::vector<double> loss_history;  ///< per-epoch mean log-objective
  Matrix initial_xi;                 ///< interaction matrix before the first update
};

/// Rescales every row to the given L2 norm. Zero rows are an error.
Dataset normalize_features(const Dataset& data, double target_norm);

/// log N(x; mean, diag(exp(log_variances)))
double gaussian_log_emission(const GaussianEmission& emission, const VectorRef& x, const VectorRef& mean_row);

/// log of the exact sum over the batch of sum_mu p_V(x|mu) p_H(mu|x).
double exact_objective(const TrainState& state, const Dataset& batch);

/// log of the Monte Carlo estimate of the same sum: for each x, mc_samples
/// indices mu_m ~ p_H(mu|x) and the average of p_V(x|mu_m).
double mc_objective(const TrainState& state, const Dataset& batch, std::size_t mc_samples, std::uint64_t seed);

/// Mean per-sample log objective and its analytic gradient, by enumeration.
ObjectiveGradient exact_gradient(const TrainState& state, const Dataset& batch);

/// Sampled counterpart: importance weights over the drawn indices replace the
/// exact responsibilities.
ObjectiveGradient sampled_gradient(const TrainState& state, const Dataset& batch, std::size_t mc_samples, Rng& rng);

TrainResult train(const Dataset& data, const TrainerConfig& cfg);

/// "epoch,mean_log_objective" rows with a one-line header.
void write_loss_csv(std::ostream& out, const std::vector<double>& history);

}  // namespace reclag
