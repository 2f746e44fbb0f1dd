#include "reclag/dynamics.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "reclag/energy.hpp"
#include "reclag/random.hpp"

namespace reclag {

namespace {

void check_finite(const Vector& v, std::size_t step) {
  if (!v.allFinite()) throw DivergenceError("non-finite feature state", step);
}

// One adiabatic step: h = xi g(v), v' = xi^T f(h).
Vector adiabatic_step(const InteractionMatrix& xi, const Vector& v, const MemoryLagrangian& mem,
                      FeatureLagrangian feat) {
  const Vector h = xi.project(feature_activation(feat, v));
  return xi.values().transpose() * memory_activation(mem, h);
}

}  // namespace

FeatureState vanilla_update(const InteractionMatrix& xi, const FeatureState& v, double beta) {
  detail::require(beta > 0.0, "beta must be positive");
  const Vector h = xi.project(v.v);
  const Vector p = softmax(Vector(beta * h));
  return {xi.values().transpose() * p, v.step + 1};
}

FeatureState reclag_update(const InteractionMatrix& xi, const FeatureState& v, double beta, double gamma) {
  detail::require(beta > 0.0 && gamma > 0.0, "beta and gamma must be positive");
  if (gate_indicator(gate_value(xi, v.v, beta, gamma)) == 0.0) {
    return {Vector::Zero(xi.n_feature()), v.step + 1};
  }
  return vanilla_update(xi, v, beta);
}

Trajectory integrate_two_body(const InteractionMatrix& xi, const FeatureState& v0, const MemoryState& h0,
                              const MemoryLagrangian& mem, FeatureLagrangian feat, const HopfieldConfig& cfg,
                              std::size_t steps, bool track_energy) {
  cfg.validate();
  validate(mem);
  detail::require(steps >= 1, "integration needs at least one step");
  detail::require_dim(v0.v.size(), xi.n_feature(), "initial feature state");
  detail::require_dim(h0.h.size(), xi.n_memory(), "initial memory state");

  Trajectory traj;
  traj.states.reserve(steps + 1);
  traj.states.push_back(v0);
  Vector v = v0.v;
  Vector h = cfg.adiabatic ? xi.project(feature_activation(feat, v)) : h0.h;
  if (track_energy) traj.energies.push_back(general_energy(xi, v, h, mem, feat));

  const Matrix& w = xi.values();
  for (std::size_t k = 0; k < steps; ++k) {
    if (cfg.adiabatic) {
      v = w.transpose() * memory_activation(mem, h);
      check_finite(v, k + 1);
      h = xi.project(feature_activation(feat, v));
    } else {
      const Vector dh = (w * feature_activation(feat, v) - h) * (cfg.dt / cfg.tau_h);
      const Vector dv = (w.transpose() * memory_activation(mem, h) - v) * (cfg.dt / cfg.tau_v);
      h += dh;
      v += dv;
      check_finite(v, k + 1);
      if (!h.allFinite()) throw DivergenceError("non-finite memory state", k + 1);
    }
    traj.states.push_back({v, v0.step + k + 1});
    if (track_energy) traj.energies.push_back(general_energy(xi, v, h, mem, feat));
  }
  traj.steps_taken = steps;
  // A fixed horizon has no tolerance; only an exactly repeated state counts.
  traj.converged = (traj.states[steps].v - traj.states[steps - 1].v).isZero(0.0);
  return traj;
}

Trajectory run_to_fixed_point(const InteractionMatrix& xi, const FeatureState& v0, const MemoryLagrangian& mem,
                              FeatureLagrangian feat, const FixedPointOptions& opts) {
  validate(mem);
  detail::require(opts.tol > 0.0, "tolerance must be positive");
  detail::require(opts.max_steps >= 1, "max_steps must be >= 1");
  detail::require_dim(v0.v.size(), xi.n_feature(), "initial feature state");
  check_finite(v0.v, 0);

  Trajectory traj;
  traj.states.push_back(v0);
  if (opts.track_energy) traj.energies.push_back(adiabatic_energy(xi, v0.v, mem, feat));
  for (std::size_t k = 0; k < opts.max_steps; ++k) {
    const Vector& prev = traj.states.back().v;
    Vector next = adiabatic_step(xi, prev, mem, feat);
    check_finite(next, k + 1);
    const double delta = (next - prev).norm();
    traj.states.push_back({std::move(next), v0.step + k + 1});
    if (opts.track_energy) traj.energies.push_back(adiabatic_energy(xi, traj.states.back().v, mem, feat));
    traj.steps_taken = k + 1;
    if (delta < opts.tol) {
      traj.converged = true;
      break;
    }
  }
  return traj;
}

double capture_radius(const InteractionMatrix& xi, double beta, double gamma) {
  detail::require(beta > 0.0, "beta must be positive");
  const auto n_memory = static_cast<double>(xi.n_memory());
  if (!(gamma > n_memory)) {
    throw InvalidArgument("origin attractor requires gamma > N_H (gamma = " + fmt::format("{}", gamma) +
                          ", N_H = " + fmt::format("{}", xi.n_memory()) + ")");
  }
  const double xi_max = xi.max_abs();
  if (xi_max == 0.0) return std::numeric_limits<double>::infinity();
  return std::log(gamma / n_memory) / (static_cast<double>(xi.n_feature()) * beta * xi_max);
}

double default_origin_tol(const InteractionMatrix& xi, double beta, double gamma) {
  if (!(gamma > static_cast<double>(xi.n_memory()))) return 1e-6;
  return std::min(1e-6, capture_radius(xi, beta, gamma) / 2.0);
}

AttractorLabel classify_attractor(const Trajectory& traj, const InteractionMatrix& xi, double origin_tol) {
  if (!traj.converged || traj.states.empty()) return attractor::Unconverged{};
  const Vector& v = traj.final_state().v;
  if (v.norm() < origin_tol) return attractor::Origin{};
  attractor::Pattern best{0, std::numeric_limits<double>::infinity()};
  for (Eigen::Index mu = 0; mu < xi.n_memory(); ++mu) {
    const double d = (v - xi.row(mu).transpose()).norm();
    if (d < best.distance) best = {mu, d};
  }
  return best;
}

BallCheckReport theorem1_ball_check(const InteractionMatrix& xi, double beta, double gamma, std::size_t n_probes,
                                    std::uint64_t seed) {
  BallCheckReport report;
  report.epsilon = capture_radius(xi, beta, gamma);
  report.n_probes = n_probes;

  const FeatureState origin{Vector::Zero(xi.n_feature()), 0};
  report.origin_fixed = reclag_update(xi, origin, beta, gamma).v.isZero(0.0);

  // An all-zero xi captures everything; probe the unit ball instead of an infinite one.
  const double radius = std::isfinite(report.epsilon) ? report.epsilon : 1.0;
  Rng rng(seed);
  for (std::size_t p = 0; p < n_probes; ++p) {
    const FeatureState probe{sample_uniform_ball(rng, xi.n_feature(), radius), 0};
    if (reclag_update(xi, probe, beta, gamma).v.isZero(0.0)) ++report.n_captured;
  }
  report.all_captured = report.origin_fixed && report.n_captured == n_probes;
  return report;
}

double theorem2_gamma(const InteractionMatrix& xi, double beta, const Trajectory& vanilla_traj, double delta) {
  detail::require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  detail::require(beta > 0.0, "beta must be positive");
  detail::require(!vanilla_traj.states.empty(), "trajectory is empty");
  double min_lse = std::numeric_limits<double>::infinity();
  for (const auto& s : vanilla_traj.states) {
    min_lse = std::min(min_lse, stable_log_sum_exp(Vector(beta * xi.project(s.v))));
  }
  return std::exp(std::log(delta) + min_lse);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const bool with_energy = !traj.energies.empty();
  const Eigen::Index dim = traj.states.empty() ? 0 : traj.states.front().v.size();
  out << "k";
  for (Eigen::Index i = 0; i < dim; ++i) out << ",v" << i;
  if (with_energy) out << ",energy";
  out << '\n';
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out << traj.states[k].step;
    for (Eigen::Index i = 0; i < dim; ++i) fmt::print(out, ",{}", traj.states[k].v[i]);
    if (with_energy) fmt::print(out, ",{}", traj.energies[k]);
    out << '\n';
  }
}

}  // namespace reclag
