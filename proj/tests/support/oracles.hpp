#pragma once

// Brute-force and long-double reference implementations used as oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "reclag/ood.hpp"

namespace reclag::testing {

// Scan every candidate threshold and keep the largest one that reaches the target.
inline double brute_fpr_at_tpr(const ScoreSet& s, double target) {
  std::set<double> candidates(s.id_scores.begin(), s.id_scores.end());
  double best = -std::numeric_limits<double>::infinity();
  for (double tau : candidates) {
    std::size_t tp = 0;
    for (double x : s.id_scores) tp += x >= tau;
    if (static_cast<double>(tp) / static_cast<double>(s.id_scores.size()) >= target) best = std::max(best, tau);
  }
  std::size_t fp = 0;
  for (double x : s.ood_scores) fp += x >= best;
  return static_cast<double>(fp) / static_cast<double>(s.ood_scores.size());
}

inline double brute_auc(const ScoreSet& s) {
  std::uint64_t twice = 0;
  for (double a : s.id_scores)
    for (double b : s.ood_scores) twice += a > b ? 2 : (a == b ? 1 : 0);
  return static_cast<double>(twice) /
         (2.0 * static_cast<double>(s.id_scores.size()) * static_cast<double>(s.ood_scores.size()));
}

inline std::vector<RocPoint> brute_roc(const ScoreSet& s) {
  std::set<double, std::greater<>> thresholds(s.id_scores.begin(), s.id_scores.end());
  thresholds.insert(s.ood_scores.begin(), s.ood_scores.end());
  std::vector<RocPoint> out{{0.0, 0.0}};
  for (double tau : thresholds) {
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (double x : s.id_scores) tp += x >= tau;
    for (double x : s.ood_scores) fp += x >= tau;
    out.push_back({static_cast<double>(fp) / static_cast<double>(s.ood_scores.size()),
                   static_cast<double>(tp) / static_cast<double>(s.id_scores.size())});
  }
  return out;
}

// Mean over samples of log sum_mu N(x; xi_mu, diag var) softmax_mu(beta xi x),
// written with plain loops.
inline double oracle_mean_log_objective(const Eigen::MatrixXd& xi, const Eigen::VectorXd& log_var, double beta,
                                        const Eigen::MatrixXd& data) {
  const Eigen::Index n_h = xi.rows();
  const Eigen::Index n_v = xi.cols();
  long double total = 0.0L;
  for (Eigen::Index s = 0; s < data.rows(); ++s) {
    long double z = 0.0L;
    std::vector<long double> prior(static_cast<std::size_t>(n_h));
    for (Eigen::Index mu = 0; mu < n_h; ++mu) {
      long double dot = 0.0L;
      for (Eigen::Index j = 0; j < n_v; ++j) dot += xi(mu, j) * data(s, j);
      prior[static_cast<std::size_t>(mu)] = std::exp(beta * dot);
      z += prior[static_cast<std::size_t>(mu)];
    }
    long double p = 0.0L;
    for (Eigen::Index mu = 0; mu < n_h; ++mu) {
      long double log_e = 0.0L;
      for (Eigen::Index j = 0; j < n_v; ++j) {
        const long double d = data(s, j) - xi(mu, j);
        log_e += -0.5L * (std::log(2.0L * std::numbers::pi_v<long double>) + log_var[j] + d * d / std::exp(log_var[j]));
      }
      p += std::exp(log_e) * prior[static_cast<std::size_t>(mu)] / z;
    }
    total += std::log(p);
  }
  return static_cast<double>(total / static_cast<long double>(data.rows()));
}

/// Long-double -(1/beta) log sum_mu exp(beta xi_mu . v) + |v|^2 / 2.
inline double oracle_modern_energy(const Eigen::MatrixXd& xi, const Eigen::VectorXd& v, double beta) {
  long double acc = 0.0L;
  for (Eigen::Index mu = 0; mu < xi.rows(); ++mu) {
    long double dot = 0.0L;
    for (Eigen::Index j = 0; j < xi.cols(); ++j) dot += static_cast<long double>(xi(mu, j)) * v[j];
    acc += std::exp(static_cast<long double>(beta) * dot);
  }
  long double sq = 0.0L;
  for (Eigen::Index j = 0; j < v.size(); ++j) sq += static_cast<long double>(v[j]) * v[j];
  return static_cast<double>(-std::log(acc) / beta + 0.5L * sq);
}

}  // namespace reclag::testing
