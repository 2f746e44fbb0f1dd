#include "reclag/trainer.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

namespace reclag {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

void check_state(const TrainState& state, const Dataset& batch) {
  detail::require(!batch.empty(), "objective over an empty batch");
  detail::require(state.xi.rows() >= 1, "interaction matrix has no rows");
  detail::require(state.beta > 0.0, "beta must be positive");
  detail::require_dim(batch.dim(), state.xi.cols(), "batch feature dimension");
  detail::require_dim(state.emission.log_variances.size(), state.xi.cols(), "emission log-variances");
}

// Per-sample quantities shared by the objective and gradient paths.
struct SampleTerms {
  Vector log_prior;     // log p_H(mu|x)
  Vector log_emission;  // log p_V(x|mu)
};

SampleTerms sample_terms(const TrainState& state, const Vector& x, const Vector& inv_var, double log_norm) {
  SampleTerms t;
  const Vector a = state.beta * (state.xi * x);
  t.log_prior = a.array() - stable_log_sum_exp(a);
  const Matrix diff = (-state.xi).rowwise() + x.transpose();
  const Vector quad = diff.array().square().matrix() * inv_var;
  t.log_emission = -0.5 * (quad.array() + log_norm);
  return t;
}

double emission_log_norm(const GaussianEmission& emission) {
  return static_cast<double>(emission.log_variances.size()) * kLog2Pi + emission.log_variances.sum();
}

Eigen::Index sample_index(const Vector& probs, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double acc = 0.0;
  for (Eigen::Index mu = 0; mu < probs.size(); ++mu) {
    acc += probs[mu];
    if (u < acc) return mu;
  }
  return probs.size() - 1;
}

// Accumulates the gradient of log P(x) given responsibilities r over memories.
void accumulate_gradient(const TrainState& state, const Vector& x, const Vector& inv_var, const Vector& r,
                         const Vector& prior, ObjectiveGradient& out) {
  const Matrix diff = (-state.xi).rowwise() + x.transpose();  // x - xi_mu per row
  out.d_xi += (r.asDiagonal() * diff) * inv_var.asDiagonal();
  out.d_xi += (state.beta * (r - prior)) * x.transpose();
  const Vector weighted_sq = diff.array().square().matrix().transpose() * r;
  out.d_log_variances += 0.5 * (weighted_sq.cwiseProduct(inv_var) - Vector::Constant(x.size(), r.sum()));
}

}  // namespace

void TrainerConfig::validate() const {
  detail::require(epochs >= 1, "epochs must be >= 1");
  detail::require(mc_samples >= 1, "mc_samples must be >= 1");
  detail::require(learning_rate > 0.0, "learning rate must be positive");
  detail::require(feature_norm_target > 0.0, "feature norm target must be positive");
  detail::require(beta > 0.0, "beta must be positive");
  detail::require(n_memory >= 1, "n_memory must be >= 1");
  detail::require(batch_size >= 1, "batch size must be >= 1");
  if (gamma) detail::require(*gamma > 0.0, "gamma must be positive");
  if (const auto* g = std::get_if<init::GaussianNoise>(&init)) {
    detail::require(g->scale > 0.0, "noise init scale must be positive");
  }
}

Dataset normalize_features(const Dataset& data, double target_norm) {
  detail::require(target_norm > 0.0, "target norm must be positive");
  Dataset out = data;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double n = data.features.row(i).norm();
    if (n == 0.0) throw InvalidArgument(fmt::format("sample {} is a zero vector and cannot be normalized", i));
    out.features.row(i) *= target_norm / n;
  }
  return out;
}

double gaussian_log_emission(const GaussianEmission& emission, const VectorRef& x, const VectorRef& mean_row) {
  detail::require_dim(x.size(), emission.log_variances.size(), "feature vector");
  detail::require_dim(mean_row.size(), emission.log_variances.size(), "mean row");
  const Vector inv_var = (-emission.log_variances.array()).exp().matrix();
  const double quad = (x - mean_row).array().square().matrix().dot(inv_var);
  return -0.5 * (emission_log_norm(emission) + quad);
}

double exact_objective(const TrainState& state, const Dataset& batch) {
  check_state(state, batch);
  const Vector inv_var = (-state.emission.log_variances.array()).exp().matrix();
  const double log_norm = emission_log_norm(state.emission);
  std::vector<double> per_sample(static_cast<std::size_t>(batch.size()));
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const SampleTerms t = sample_terms(state, batch.sample(i), inv_var, log_norm);
    per_sample[static_cast<std::size_t>(i)] = stable_log_sum_exp(Vector(t.log_emission + t.log_prior));
  }
  return stable_log_sum_exp(std::span<const double>(per_sample));
}

double mc_objective(const TrainState& state, const Dataset& batch, std::size_t mc_samples, std::uint64_t seed) {
  check_state(state, batch);
  detail::require(mc_samples >= 1, "mc_samples must be >= 1");
  const Vector inv_var = (-state.emission.log_variances.array()).exp().matrix();
  const double log_norm = emission_log_norm(state.emission);
  const double log_m = std::log(static_cast<double>(mc_samples));
  Rng rng(seed);
  std::vector<double> per_sample(static_cast<std::size_t>(batch.size()));
  Vector drawn(static_cast<Eigen::Index>(mc_samples));
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const SampleTerms t = sample_terms(state, batch.sample(i), inv_var, log_norm);
    const Vector prior = t.log_prior.array().exp();
    for (std::size_t m = 0; m < mc_samples; ++m) {
      drawn[static_cast<Eigen::Index>(m)] = t.log_emission[sample_index(prior, rng)];
    }
    per_sample[static_cast<std::size_t>(i)] = stable_log_sum_exp(drawn) - log_m;
  }
  return stable_log_sum_exp(std::span<const double>(per_sample));
}

ObjectiveGradient exact_gradient(const TrainState& state, const Dataset& batch) {
  check_state(state, batch);
  const Vector inv_var = (-state.emission.log_variances.array()).exp().matrix();
  const double log_norm = emission_log_norm(state.emission);
  ObjectiveGradient out{0.0, Matrix::Zero(state.xi.rows(), state.xi.cols()), Vector::Zero(state.xi.cols())};
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const Vector x = batch.sample(i);
    const SampleTerms t = sample_terms(state, x, inv_var, log_norm);
    const Vector joint = t.log_emission + t.log_prior;
    const double log_p = stable_log_sum_exp(joint);
    const Vector r = (joint.array() - log_p).exp();
    const Vector prior = t.log_prior.array().exp();
    out.mean_log_objective += log_p;
    accumulate_gradient(state, x, inv_var, r, prior, out);
  }
  const double n = static_cast<double>(batch.size());
  out.mean_log_objective /= n;
  out.d_xi /= n;
  out.d_log_variances /= n;
  return out;
}

ObjectiveGradient sampled_gradient(const TrainState& state, const Dataset& batch, std::size_t mc_samples, Rng& rng) {
  check_state(state, batch);
  detail::require(mc_samples >= 1, "mc_samples must be >= 1");
  const Vector inv_var = (-state.emission.log_variances.array()).exp().matrix();
  const double log_norm = emission_log_norm(state.emission);
  const double log_m = std::log(static_cast<double>(mc_samples));
  ObjectiveGradient out{0.0, Matrix::Zero(state.xi.rows(), state.xi.cols()), Vector::Zero(state.xi.cols())};
  std::vector<Eigen::Index> idx(mc_samples);
  Vector drawn(static_cast<Eigen::Index>(mc_samples));
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const Vector x = batch.sample(i);
    const SampleTerms t = sample_terms(state, x, inv_var, log_norm);
    const Vector prior = t.log_prior.array().exp();
    for (std::size_t m = 0; m < mc_samples; ++m) {
      idx[m] = sample_index(prior, rng);
      drawn[static_cast<Eigen::Index>(m)] = t.log_emission[idx[m]];
    }
    const double lse = stable_log_sum_exp(drawn);
    Vector r = Vector::Zero(state.xi.rows());
    for (std::size_t m = 0; m < mc_samples; ++m) r[idx[m]] += std::exp(drawn[static_cast<Eigen::Index>(m)] - lse);
    out.mean_log_objective += lse - log_m;
    accumulate_gradient(state, x, inv_var, r, prior, out);
  }
  const double n = static_cast<double>(batch.size());
  out.mean_log_objective /= n;
  out.d_xi /= n;
  out.d_log_variances /= n;
  return out;
}

namespace {

Matrix initial_rows(const Dataset& data, const TrainerConfig& cfg, Rng& rng) {
  Matrix xi(cfg.n_memory, data.dim());
  if (const auto* noise = std::get_if<init::GaussianNoise>(&cfg.init)) {
    std::normal_distribution<double> normal(0.0, noise->scale);
    for (Eigen::Index mu = 0; mu < xi.rows(); ++mu)
      for (Eigen::Index j = 0; j < xi.cols(); ++j) xi(mu, j) = normal(rng);
    return xi;
  }
  const auto n = static_cast<std::size_t>(data.size());
  const auto n_memory = static_cast<std::size_t>(cfg.n_memory);
  if (n_memory <= n) {
    // Partial Fisher-Yates: the first n_memory entries are a uniform draw without replacement.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = 0; k < n_memory; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, n - 1);
      std::swap(order[k], order[pick(rng)]);
      xi.row(static_cast<Eigen::Index>(k)) = data.features.row(static_cast<Eigen::Index>(order[k]));
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t k = 0; k < n_memory; ++k) {
      xi.row(static_cast<Eigen::Index>(k)) = data.features.row(static_cast<Eigen::Index>(pick(rng)));
    }
  }
  return xi;
}

Dataset gather_rows(const Dataset& data, const std::vector<Eigen::Index>& order, std::size_t begin, std::size_t end) {
  Dataset batch;
  batch.features.resize(static_cast<Eigen::Index>(end - begin), data.dim());
  for (std::size_t k = begin; k < end; ++k) {
    batch.features.row(static_cast<Eigen::Index>(k - begin)) = data.features.row(order[k]);
  }
  return batch;
}

}  // namespace

TrainResult train(const Dataset& data, const TrainerConfig& cfg) {
  cfg.validate();
  detail::require(!data.empty(), "training data is empty");
  data.validate();

  const Dataset normalized = normalize_features(data, cfg.feature_norm_target);
  Rng rng(cfg.seed);

  TrainState state;
  state.beta = cfg.beta;
  state.xi = initial_rows(normalized, cfg, rng);
  Matrix initial_xi = state.xi;
  state.emission.log_variances = Vector::Zero(normalized.dim());

  const bool exact = cfg.estimator == Estimator::Exact ||
                     (cfg.estimator == Estimator::Auto && cfg.n_memory <= cfg.exact_max_memory);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(normalized.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<double> history;
  history.reserve(cfg.epochs);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const Dataset batch = gather_rows(normalized, order, begin, end);
      const ObjectiveGradient g =
          exact ? exact_gradient(state, batch) : sampled_gradient(state, batch, cfg.mc_samples, rng);
      if (!std::isfinite(g.mean_log_objective) || !g.d_xi.allFinite() || !g.d_log_variances.allFinite()) {
        throw DivergenceError(fmt::format("non-finite objective in epoch {} batch {}", epoch, batch_index), epoch);
      }
      epoch_sum += g.mean_log_objective * static_cast<double>(end - begin);
      state.xi += cfg.learning_rate * g.d_xi;
      state.emission.log_variances += cfg.learning_rate * g.d_log_variances;
    }
    history.push_back(epoch_sum / static_cast<double>(order.size()));
  }

  DensityModel model{InteractionMatrix(state.xi), cfg.beta, cfg.resolved_gamma(), covering_radius(normalized),
                     std::nullopt, cfg.feature_norm_target};
  return {std::move(model), std::move(state.emission), std::move(history), std::move(initial_xi)};
}

void write_loss_csv(std::ostream& out, const std::vector<double>& history) {
  out << "epoch,mean_log_objective\n";
  for (std::size_t e = 0; e < history.size(); ++e) fmt::print(out, "{},{}\n", e, history[e]);
}

}  // namespace reclag
