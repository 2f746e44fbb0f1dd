#include "reclag/energy.hpp"

#include <cmath>
#include <map>
#include <string>
#include <utility>

namespace reclag {

double general_energy(const InteractionMatrix& xi, const VectorRef& v, const VectorRef& h,
                      const MemoryLagrangian& mem, FeatureLagrangian feat) {
  detail::require_dim(v.size(), xi.n_feature(), "feature state");
  detail::require_dim(h.size(), xi.n_memory(), "memory state");
  const Vector g = feature_activation(feat, v);
  const Vector f = memory_activation(mem, h);
  const double feature_terms = v.dot(g) - eval_feature_lagrangian(feat, v);
  const double memory_terms = h.dot(f) - eval_memory_lagrangian(mem, h);
  const double interaction = f.dot(xi.values() * g);
  return feature_terms + memory_terms - interaction;
}

double adiabatic_energy(const InteractionMatrix& xi, const VectorRef& v, const MemoryLagrangian& mem,
                        FeatureLagrangian feat) {
  const Vector h = xi.project(feature_activation(feat, v));
  return general_energy(xi, v, h, mem, feat);
}

double dense_energy(const InteractionMatrix& xi, const VectorRef& v, const Sigma& sigma) {
  const Vector s = feature_activation(FeatureLagrangian::AbsSum, v);
  const Vector h = xi.project(s);
  double acc = 0.0;
  for (Eigen::Index mu = 0; mu < h.size(); ++mu) acc += sigma.value(h[mu]);
  return -acc;
}

double modern_energy(const InteractionMatrix& xi, const VectorRef& v, double beta) {
  detail::require(beta > 0.0, "beta must be positive");
  const Vector h = xi.project(v);
  return -stable_log_sum_exp(Vector(beta * h)) / beta + 0.5 * v.squaredNorm();
}

ClassPatternBank::ClassPatternBank(std::vector<Matrix> patterns) : patterns_(std::move(patterns)) {
  detail::require(!patterns_.empty(), "pattern bank needs at least one class");
  const Eigen::Index n = patterns_.front().cols();
  for (const auto& s : patterns_) {
    detail::require(s.rows() >= 1 && s.cols() >= 1, "every class needs a nonempty pattern matrix");
    detail::require_dim(s.cols(), n, "class pattern matrix columns");
    detail::require(s.allFinite(), "class pattern matrix has non-finite entries");
  }
}

namespace {

std::map<std::uint32_t, std::vector<Eigen::Index>> rows_by_class(const Dataset& data) {
  detail::require(data.labels.has_value(), "pattern bank construction needs labels");
  detail::require(!data.empty(), "pattern bank construction needs data");
  std::map<std::uint32_t, std::vector<Eigen::Index>> by_class;
  for (Eigen::Index i = 0; i < data.size(); ++i) by_class[(*data.labels)[i]].push_back(i);
  const auto max_label = by_class.rbegin()->first;
  if (by_class.size() != static_cast<std::size_t>(max_label) + 1) {
    throw InvalidArgument("labels must cover 0.." + std::to_string(max_label) + " without gaps");
  }
  return by_class;
}

}  // namespace

ClassPatternBank ClassPatternBank::from_class_means(const Dataset& data) {
  std::vector<Matrix> patterns;
  for (const auto& [label, rows] : rows_by_class(data)) {
    Matrix mean = Matrix::Zero(1, data.dim());
    for (auto i : rows) mean += data.features.row(i);
    patterns.push_back(mean / static_cast<double>(rows.size()));
  }
  return ClassPatternBank(std::move(patterns));
}

ClassPatternBank ClassPatternBank::from_class_features(const Dataset& data) {
  std::vector<Matrix> patterns;
  for (const auto& [label, rows] : rows_by_class(data)) {
    Matrix s(static_cast<Eigen::Index>(rows.size()), data.dim());
    for (std::size_t r = 0; r < rows.size(); ++r) s.row(static_cast<Eigen::Index>(r)) = data.features.row(rows[r]);
    patterns.push_back(std::move(s));
  }
  return ClassPatternBank(std::move(patterns));
}

const Matrix& ClassPatternBank::patterns(std::size_t class_id) const {
  if (class_id >= patterns_.size()) {
    throw InvalidArgument("unknown class id " + std::to_string(class_id) + " (bank has " +
                          std::to_string(patterns_.size()) + " classes)");
  }
  return patterns_[class_id];
}

double mhe_score(const ClassPatternBank& bank, std::size_t class_id, const VectorRef& v) {
  const Matrix& s = bank.patterns(class_id);
  detail::require_dim(v.size(), s.cols(), "test pattern");
  return -stable_log_sum_exp(Vector(s * v));
}

double she_score(const ClassPatternBank& bank, std::size_t class_id, const VectorRef& v) {
  const Matrix& s = bank.patterns(class_id);
  detail::require_dim(v.size(), s.cols(), "test pattern");
  return (s * v).sum() / static_cast<double>(s.rows());
}

}  // namespace reclag
