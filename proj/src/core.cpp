#include "reclag/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <utility>

namespace reclag {

namespace {

void require_finite(const VectorRef& x, const char* what) {
  if (!x.allFinite()) throw InvalidArgument(std::string(what) + ": non-finite entry");
}

double int_pow(double x, int n) {
  double out = 1.0;
  for (int i = 0; i < n; ++i) out *= x;
  return out;
}

}  // namespace

InteractionMatrix::InteractionMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw InvalidArgument("interaction matrix must be at least 1x1");
  }
  if (!values_.allFinite()) throw InvalidArgument("interaction matrix has non-finite entries");
}

Vector InteractionMatrix::project(const VectorRef& v) const {
  detail::require_dim(v.size(), n_feature(), "feature state");
  return values_ * v;
}

Sigma Sigma::square() { return Sigma(Kind::Square, 2); }

Sigma Sigma::power(int exponent) {
  detail::require(exponent >= 1, "sigma power exponent must be >= 1");
  return Sigma(Kind::Power, exponent);
}

Sigma Sigma::custom(std::function<double(double)> value, std::function<double(double)> derivative) {
  detail::require(value && derivative, "custom sigma needs both value and derivative");
  Sigma s(Kind::Custom, 0);
  s.value_ = std::move(value);
  s.derivative_ = std::move(derivative);
  return s;
}

double Sigma::value(double x) const {
  switch (kind_) {
    case Kind::Square:
      return x * x;
    case Kind::Power:
      return int_pow(x, exponent_);
    case Kind::Custom:
      return value_(x);
  }
  return 0.0;
}

double Sigma::derivative(double x) const {
  switch (kind_) {
    case Kind::Square:
      return 2.0 * x;
    case Kind::Power:
      return exponent_ * int_pow(x, exponent_ - 1);
    case Kind::Custom:
      return derivative_(x);
  }
  return 0.0;
}

void HopfieldConfig::validate() const {
  detail::require(tau_v > 0.0 && tau_h > 0.0 && dt > 0.0, "tau_v, tau_h and dt must be positive");
}

void validate(const MemoryLagrangian& lagrangian) {
  if (const auto* lse = std::get_if<LogSumExp>(&lagrangian)) {
    detail::require(lse->beta > 0.0, "beta must be positive");
  } else if (const auto* rl = std::get_if<RecLag>(&lagrangian)) {
    detail::require(rl->beta > 0.0, "beta must be positive");
    detail::require(rl->gamma > 0.0, "gamma must be positive");
  }
}

bool has_origin_attractor(const RecLag& lagrangian, Eigen::Index n_memory) {
  return lagrangian.gamma > static_cast<double>(n_memory);
}

double stable_log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("log-sum-exp of an empty vector");
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : values) acc += std::exp(x - m);
  return m + std::log(acc);
}

double stable_log_sum_exp(const VectorRef& values) {
  return stable_log_sum_exp(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

Vector softmax(const VectorRef& logits) {
  if (logits.size() == 0) throw InvalidArgument("softmax of an empty vector");
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

double eval_memory_lagrangian(const MemoryLagrangian& lagrangian, const VectorRef& h) {
  validate(lagrangian);
  require_finite(h, "memory state");
  detail::require(h.size() >= 1, "memory state must be nonempty");
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, AdditiveSigma>) {
          double acc = 0.0;
          for (Eigen::Index mu = 0; mu < h.size(); ++mu) acc += s.sigma.value(h[mu]);
          return acc;
        } else if constexpr (std::is_same_v<T, LogSumExp>) {
          return stable_log_sum_exp(Vector(s.beta * h)) / s.beta;
        } else {
          const double inner = (stable_log_sum_exp(Vector(s.beta * h)) - std::log(s.gamma)) / s.beta;
          return std::max(inner, 0.0);
        }
      },
      lagrangian);
}

Vector memory_activation(const MemoryLagrangian& lagrangian, const VectorRef& h) {
  validate(lagrangian);
  require_finite(h, "memory state");
  detail::require(h.size() >= 1, "memory state must be nonempty");
  return std::visit(
      [&](const auto& s) -> Vector {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, AdditiveSigma>) {
          Vector f(h.size());
          for (Eigen::Index mu = 0; mu < h.size(); ++mu) f[mu] = s.sigma.derivative(h[mu]);
          return f;
        } else if constexpr (std::is_same_v<T, LogSumExp>) {
          return softmax(Vector(s.beta * h));
        } else {
          if (gate_indicator(gate_from_memory(h, s.beta, s.gamma)) == 0.0) return Vector::Zero(h.size());
          return softmax(Vector(s.beta * h));
        }
      },
      lagrangian);
}

double eval_feature_lagrangian(FeatureLagrangian lagrangian, const VectorRef& v) {
  require_finite(v, "feature state");
  switch (lagrangian) {
    case FeatureLagrangian::AbsSum:
      return v.cwiseAbs().sum();
    case FeatureLagrangian::HalfSquare:
      return 0.5 * v.squaredNorm();
  }
  return 0.0;
}

Vector feature_activation(FeatureLagrangian lagrangian, const VectorRef& v) {
  require_finite(v, "feature state");
  switch (lagrangian) {
    case FeatureLagrangian::AbsSum:
      return v.unaryExpr([](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
    case FeatureLagrangian::HalfSquare:
      return v;
  }
  return v;
}

double gate_from_memory(const VectorRef& h, double beta, double gamma) {
  detail::require(beta > 0.0 && gamma > 0.0, "gate needs beta > 0 and gamma > 0");
  return stable_log_sum_exp(Vector(beta * h)) - std::log(gamma);
}

double gate_value(const InteractionMatrix& xi, const VectorRef& v, double beta, double gamma) {
  require_finite(v, "feature state");
  return gate_from_memory(xi.project(v), beta, gamma);
}

}  // namespace reclag
