#pragma once

#include <vector>

#include "reclag/core.hpp"
#include "reclag/dataset.hpp"

namespace reclag {

/// E(v,h) = v.g(v) - L_V(v) + h.f(h) - L_H(h) - f(h)^T xi g(v)
double general_energy(const InteractionMatrix& xi, const VectorRef& v, const VectorRef& h,
                      const MemoryLagrangian& mem, FeatureLagrangian feat);

/// general_energy with the memory state at its adiabatic value h = xi g(v).
double adiabatic_energy(const InteractionMatrix& xi, const VectorRef& v, const MemoryLagrangian& mem,
                        FeatureLagrangian feat);

/// Dense associative memory energy -sum_mu sigma(sum_i xi_{mu i} sgn(v_i)).
double dense_energy(const InteractionMatrix& xi, const VectorRef& v, const Sigma& sigma);

/// -(1/beta) log sum_mu exp(beta xi_mu . v) + 1/2 |v|^2
double modern_energy(const InteractionMatrix& xi, const VectorRef& v, double beta);

/// Class-specific pattern matrices S^c. Each matrix has d rows (summed by mu)
/// and N columns (contracted with the test vector), so test vectors have
/// length N.
class ClassPatternBank {
 public:
  explicit ClassPatternBank(std::vector<Matrix> patterns);

  /// One row per class holding the class mean of the features (d = 1).
  static ClassPatternBank from_class_means(const Dataset& data);

  /// All features of each class stacked as rows (d = class count).
  static ClassPatternBank from_class_features(const Dataset& data);

  std::size_t n_classes() const noexcept { return patterns_.size(); }
  Eigen::Index pattern_length() const noexcept { return patterns_.front().cols(); }
  const Matrix& patterns(std::size_t class_id) const;

 private:
  std::vector<Matrix> patterns_;
};

/// MHE = -log sum_mu exp(S^c_mu . v). Lower means more in-distribution.
double mhe_score(const ClassPatternBank& bank, std::size_t class_id, const VectorRef& v);

/// SHE = (1/d) sum_mu S^c_mu . v, with d the row count of S^c.
double she_score(const ClassPatternBank& bank, std::size_t class_id, const VectorRef& v);

}  // namespace reclag
