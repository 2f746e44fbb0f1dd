#pragma once

// Domain types and the Lagrangian machinery shared by every module:
// interaction matrix, neuron states, memory/feature Lagrangians with their
// activations, and the gate G(v) that opens or closes the RecLag update.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <variant>

#include "reclag/error.hpp"

namespace reclag {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<const Vector>;

/// Synapse matrix of shape (n_memory, n_feature). Row mu is the stored
/// pattern xi_mu in feature space.
class InteractionMatrix {
 public:
  explicit InteractionMatrix(Matrix values);

  Eigen::Index n_memory() const noexcept { return values_.rows(); }
  Eigen::Index n_feature() const noexcept { return values_.cols(); }
  const Matrix& values() const noexcept { return values_; }
  auto row(Eigen::Index mu) const { return values_.row(mu); }

  /// max_{mu,j} |xi_{mu j}|
  double max_abs() const { return values_.cwiseAbs().maxCoeff(); }

  /// h = xi v, the adiabatic memory state for feature state v.
  Vector project(const VectorRef& v) const;

 private:
  Matrix values_;
};

struct FeatureState {
  Vector v;
  std::size_t step = 0;
};

struct MemoryState {
  Vector h;
};

/// Scalar nonlinearity sigma for the additive memory Lagrangian, with its
/// hand-coded derivative.
class Sigma {
 public:
  enum class Kind { Square, Power, Custom };

  static Sigma square();
  static Sigma power(int exponent);
  static Sigma custom(std::function<double(double)> value, std::function<double(double)> derivative);

  double value(double x) const;
  double derivative(double x) const;
  Kind kind() const noexcept { return kind_; }
  int exponent() const noexcept { return exponent_; }

 private:
  Sigma(Kind kind, int exponent) : kind_(kind), exponent_(exponent) {}

  Kind kind_;
  int exponent_;
  std::function<double(double)> value_;
  std::function<double(double)> derivative_;
};

/// L_H(h) = sum_mu sigma(h_mu)
struct AdditiveSigma {
  Sigma sigma = Sigma::square();
};

/// L_H(h) = (1/beta) log sum_mu exp(beta h_mu)
struct LogSumExp {
  double beta = 1.0;
};

/// L_H(h) = max((1/beta) log((1/gamma) sum_mu exp(beta h_mu)), 0)
struct RecLag {
  double beta = 1.0;
  double gamma = 1.0;
};

using MemoryLagrangian = std::variant<AdditiveSigma, LogSumExp, RecLag>;

enum class FeatureLagrangian {
  AbsSum,      ///< L_V(v) = sum_i |v_i|
  HalfSquare,  ///< L_V(v) = 1/2 sum_i v_i^2
};

struct HopfieldConfig {
  double tau_v = 1.0;
  double tau_h = 1.0;
  double dt = 1.0;
  bool adiabatic = true;

  void validate() const;
};

/// Throws InvalidArgument unless beta > 0 (and gamma > 0 for RecLag).
void validate(const MemoryLagrangian& lagrangian);

/// True when gamma > n_memory, the regime in which the origin is a point
/// attractor of the RecLag update.
bool has_origin_attractor(const RecLag& lagrangian, Eigen::Index n_memory);

double stable_log_sum_exp(std::span<const double> values);
double stable_log_sum_exp(const VectorRef& values);

/// Max-shifted softmax.
Vector softmax(const VectorRef& logits);

/// chi(x) = 1 for x >= 0, 0 otherwise.
inline double gate_indicator(double x) { return x >= 0.0 ? 1.0 : 0.0; }

double eval_memory_lagrangian(const MemoryLagrangian& lagrangian, const VectorRef& h);

/// f(h) = dL_H/dh.
Vector memory_activation(const MemoryLagrangian& lagrangian, const VectorRef& h);

double eval_feature_lagrangian(FeatureLagrangian lagrangian, const VectorRef& v);

/// g(v) = dL_V/dv, with sgn(0) = 0 for AbsSum.
Vector feature_activation(FeatureLagrangian lagrangian, const VectorRef& v);

/// G(v) = log((1/gamma) sum_mu exp(beta xi_mu . v)).
double gate_value(const InteractionMatrix& xi, const VectorRef& v, double beta, double gamma);

/// Same as gate_value but from a precomputed memory state h = xi v.
double gate_from_memory(const VectorRef& h, double beta, double gamma);

}  // namespace reclag
