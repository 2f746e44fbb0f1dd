#pragma once

// Discrete-time Hopfield dynamics: the adiabatic softmax update, its RecLag
// gated counterpart, explicit Euler integration of the two-body system,
// fixed-point iteration, and attractor classification.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

#include "reclag/core.hpp"

namespace reclag {

struct Trajectory {
  std::vector<FeatureState> states;
  std::vector<double> energies;  ///< empty when energy tracking is off
  bool converged = false;
  std::size_t steps_taken = 0;

  const FeatureState& final_state() const { return states.back(); }
};

namespace attractor {
struct Origin {};
struct Pattern {
  Eigen::Index index = 0;
  double distance = 0.0;
};
struct Unconverged {};
}  // namespace attractor

using AttractorLabel = std::variant<attractor::Origin, attractor::Pattern, attractor::Unconverged>;

/// v' = xi^T softmax(beta xi v).
FeatureState vanilla_update(const InteractionMatrix& xi, const FeatureState& v, double beta);

/// v' = chi(G(v)) * vanilla_update(xi, v, beta). The closed gate yields the
/// exact zero vector.
FeatureState reclag_update(const InteractionMatrix& xi, const FeatureState& v, double beta, double gamma);

/// Explicit Euler integration of the two-body system for `steps` steps. In
/// adiabatic mode the memory state is set to xi g(v) and tau_v is taken to be
/// dt, so each step is exactly one vanilla/RecLag update.
Trajectory integrate_two_body(const InteractionMatrix& xi, const FeatureState& v0, const MemoryState& h0,
                              const MemoryLagrangian& mem, FeatureLagrangian feat, const HopfieldConfig& cfg,
                              std::size_t steps, bool track_energy = true);

struct FixedPointOptions {
  double tol = 1e-8;
  std::size_t max_steps = 1000;
  bool track_energy = true;
};

/// Iterates the adiabatic update until |v^(k+1) - v^(k)|_2 < tol.
Trajectory run_to_fixed_point(const InteractionMatrix& xi, const FeatureState& v0, const MemoryLagrangian& mem,
                              FeatureLagrangian feat, const FixedPointOptions& opts = {});

/// Radius of the ball around the origin captured in one RecLag step:
/// log(gamma / N_H) / (N_V beta max|xi|). Requires gamma > N_H.
double capture_radius(const InteractionMatrix& xi, double beta, double gamma);

/// min(1e-6, capture_radius / 2) when gamma > N_H, otherwise 1e-6.
double default_origin_tol(const InteractionMatrix& xi, double beta, double gamma);

AttractorLabel classify_attractor(const Trajectory& traj, const InteractionMatrix& xi, double origin_tol);

struct BallCheckReport {
  double epsilon = 0.0;
  bool origin_fixed = false;
  bool all_captured = false;
  std::size_t n_probes = 0;
  std::size_t n_captured = 0;
};

/// Samples points uniformly in the capture ball and checks that one RecLag
/// update sends each of them (and the origin) to the exact zero vector.
BallCheckReport theorem1_ball_check(const InteractionMatrix& xi, double beta, double gamma, std::size_t n_probes,
                                    std::uint64_t seed);

/// gamma = delta * min_k sum_mu exp(beta xi_mu . v^(k)). With this gamma the
/// gate stays open along the trajectory, so the RecLag iterates reproduce it.
double theorem2_gamma(const InteractionMatrix& xi, double beta, const Trajectory& vanilla_traj, double delta);

/// Rows "k,v0,...,v{n-1},energy" with a one-line header.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace reclag
