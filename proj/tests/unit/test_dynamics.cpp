#include "doctest.h"

#include <cmath>
#include <sstream>
#include <variant>

#include "reclag/dynamics.hpp"
#include "reclag/energy.hpp"
#include "test_support.hpp"

using namespace reclag;
using reclag::testing::uniform_matrix;
using reclag::testing::uniform_vector;

namespace {

// Loop-based softmax retrieval step, written without the library helpers.
Vector oracle_vanilla(const Matrix& xi, const Vector& v, double beta) {
  const Eigen::Index n_h = xi.rows();
  std::vector<double> a(static_cast<std::size_t>(n_h));
  double top = -1e300;
  for (Eigen::Index mu = 0; mu < n_h; ++mu) {
    double dot = 0.0;
    for (Eigen::Index j = 0; j < xi.cols(); ++j) dot += xi(mu, j) * v[j];
    a[static_cast<std::size_t>(mu)] = beta * dot;
    top = std::max(top, beta * dot);
  }
  double z = 0.0;
  for (double& x : a) {
    x = std::exp(x - top);
    z += x;
  }
  Vector out = Vector::Zero(xi.cols());
  for (Eigen::Index mu = 0; mu < n_h; ++mu) out += (a[static_cast<std::size_t>(mu)] / z) * xi.row(mu).transpose();
  return out;
}

Matrix two_separated_patterns() {
  Matrix xi(2, 3);
  xi << 1.0, 0.0, 0.0,
        0.0, 1.0, 0.0;
  return xi;
}

}  // namespace

TEST_CASE("vanilla update examples") {
  const InteractionMatrix id(Matrix::Identity(2, 2));
  Vector v(2);
  v << 1.0, 0.0;
  const Vector out = vanilla_update(id, {v, 0}, 1.0).v;
  const double e = std::exp(1.0);
  CHECK(out[0] == doctest::Approx(e / (e + 1.0)).epsilon(1e-14));
  CHECK(out[1] == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-14));

  reclag::testing::Rng rng(1);
  const Matrix m = uniform_matrix(rng, 5, 3);
  const FeatureState next = vanilla_update(InteractionMatrix(m), {Vector::Zero(3), 4}, 2.0);
  CHECK(next.step == 5);
  CHECK((next.v - m.colwise().mean().transpose()).norm() < 1e-14);
}

TEST_CASE("vanilla update matches a loop oracle") {
  reclag::testing::Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const Matrix m = uniform_matrix(rng, 2 + t % 9, 1 + t % 6);
    const Vector v = uniform_vector(rng, m.cols(), -3.0, 3.0);
    const double beta = 0.5 + (t % 5);
    const Vector got = vanilla_update(InteractionMatrix(m), {v, 0}, beta).v;
    CHECK((got - oracle_vanilla(m, v, beta)).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("retrieval of a stored pattern") {
  const Matrix m = two_separated_patterns();
  const InteractionMatrix xi(m);
  Vector v = m.row(0).transpose();
  // brute-force oracle: iterate the loop update until it stops moving
  for (int k = 0; k < 500; ++k) v = oracle_vanilla(m, v, 20.0);
  CHECK((v - m.row(0).transpose()).norm() < 1e-6);

  const Trajectory traj =
      run_to_fixed_point(xi, {m.row(0).transpose(), 0}, LogSumExp{20.0}, FeatureLagrangian::HalfSquare);
  CHECK(traj.converged);
  CHECK((traj.final_state().v - v).norm() < 1e-8);
}

TEST_CASE("reclag update at the origin and with an open gate") {
  reclag::testing::Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const Matrix m = uniform_matrix(rng, 2 + t % 7, 2 + t % 5);
    const InteractionMatrix xi(m);
    const double gamma = static_cast<double>(m.rows()) * (1.0 + 0.1 * (t + 1));
    const FeatureState out = reclag_update(xi, {Vector::Zero(m.cols()), 0}, 1.0 + t % 3, gamma);
    CHECK(out.v.isZero(0.0));
    CHECK(out.step == 1);
  }

  for (int t = 0; t < 200; ++t) {
    const Matrix m = uniform_matrix(rng, 3, 4);
    const InteractionMatrix xi(m);
    const Vector v = uniform_vector(rng, 4, -2.0, 2.0);
    const double gamma = 0.5 + 0.05 * t;
    const Vector rec = reclag_update(xi, {v, 0}, 2.0, gamma).v;
    if (gate_value(xi, v, 2.0, gamma) >= 0.0) {
      CHECK((rec - vanilla_update(xi, {v, 0}, 2.0).v).cwiseAbs().maxCoeff() == 0.0);
    } else {
      CHECK(rec.isZero(0.0));
    }
  }
}

TEST_CASE("adiabatic integration reduces to the discrete updates") {
  reclag::testing::Rng rng(4);
  const Matrix m = uniform_matrix(rng, 6, 3);
  const InteractionMatrix xi(m);
  const Vector v0 = uniform_vector(rng, 3);
  HopfieldConfig cfg;
  const Trajectory traj =
      integrate_two_body(xi, {v0, 0}, {Vector::Zero(6)}, LogSumExp{2.0}, FeatureLagrangian::HalfSquare, cfg, 10);
  REQUIRE(traj.states.size() == 11);
  CHECK(traj.energies.size() == 11);
  Vector v = v0;
  for (std::size_t k = 1; k <= 10; ++k) {
    v = oracle_vanilla(m, v, 2.0);
    CHECK((traj.states[k].v - v).cwiseAbs().maxCoeff() < 1e-12);
  }

  const Trajectory rec = integrate_two_body(xi, {Vector::Zero(3), 0}, {Vector::Zero(6)}, RecLag{2.0, 12.0},
                                            FeatureLagrangian::HalfSquare, cfg, 5);
  for (const auto& s : rec.states) CHECK(s.v.isZero(0.0));
  CHECK(rec.converged);

  CHECK_THROWS_AS(integrate_two_body(xi, {v0, 0}, {Vector::Zero(6)}, LogSumExp{2.0}, FeatureLagrangian::HalfSquare,
                                     cfg, 0),
                  InvalidArgument);
}

TEST_CASE("non-adiabatic euler step matches the hand-written update") {
  reclag::testing::Rng rng(5);
  const Matrix m = uniform_matrix(rng, 4, 3);
  const InteractionMatrix xi(m);
  const Vector v0 = uniform_vector(rng, 3);
  const Vector h0 = uniform_vector(rng, 4);
  HopfieldConfig cfg{2.0, 0.5, 0.1, false};
  const Trajectory traj =
      integrate_two_body(xi, {v0, 0}, {h0}, LogSumExp{1.0}, FeatureLagrangian::HalfSquare, cfg, 1);
  Vector p = (h0.array() - h0.maxCoeff()).exp().matrix();
  p /= p.sum();
  const Vector v1 = v0 + (0.1 / 2.0) * (m.transpose() * p - v0);
  CHECK((traj.states[1].v - v1).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("divergence is reported with the step index") {
  const InteractionMatrix xi(Matrix::Constant(1, 1, 1e200));
  HopfieldConfig cfg{1.0, 1.0, 1.0, false};
  Vector v0(1);
  v0 << 1e200;
  Vector h0(1);
  h0 << 0.0;
  try {
    integrate_two_body(xi, {v0, 0}, {h0}, AdditiveSigma{Sigma::square()}, FeatureLagrangian::HalfSquare, cfg, 5,
                       false);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step() >= 1);
    CHECK(e.step() <= 5);
  }
}

TEST_CASE("fixed point iteration") {
  reclag::testing::Rng rng(6);
  const InteractionMatrix xi(uniform_matrix(rng, 4, 3));
  const Trajectory origin =
      run_to_fixed_point(xi, {Vector::Zero(3), 0}, RecLag{1.0, 8.0}, FeatureLagrangian::HalfSquare);
  CHECK(origin.converged);
  CHECK(origin.steps_taken == 1);
  CHECK(origin.final_state().v.isZero(0.0));
  CHECK(std::holds_alternative<attractor::Origin>(classify_attractor(origin, xi, default_origin_tol(xi, 1.0, 8.0))));

  const Matrix m = two_separated_patterns();
  const InteractionMatrix two(m);
  Vector near(3);
  near << 0.9, 0.1, 0.05;
  const Trajectory ret = run_to_fixed_point(two, {near, 0}, LogSumExp{5.0}, FeatureLagrangian::HalfSquare);
  CHECK(ret.converged);
  Vector v = near;
  for (int k = 0; k < 2000; ++k) v = oracle_vanilla(m, v, 5.0);
  CHECK((ret.final_state().v - v).norm() < 1e-7);

  FixedPointOptions one;
  one.max_steps = 1;
  Vector far(3);
  far << 5.0, -5.0, 3.0;
  const Trajectory short_run = run_to_fixed_point(two, {far, 0}, LogSumExp{5.0}, FeatureLagrangian::HalfSquare, one);
  CHECK_FALSE(short_run.converged);
  CHECK(std::holds_alternative<attractor::Unconverged>(classify_attractor(short_run, two, 1e-6)));

  FixedPointOptions bad;
  bad.max_steps = 0;
  CHECK_THROWS_AS(run_to_fixed_point(two, {far, 0}, LogSumExp{5.0}, FeatureLagrangian::HalfSquare, bad),
                  InvalidArgument);
}

TEST_CASE("classify attractor") {
  const Matrix m = two_separated_patterns();
  const InteractionMatrix xi(m);
  Trajectory traj;
  traj.converged = true;
  traj.states.push_back({m.row(1).transpose(), 0});
  const auto label = classify_attractor(traj, xi, 1e-6);
  REQUIRE(std::holds_alternative<attractor::Pattern>(label));
  CHECK(std::get<attractor::Pattern>(label).index == 1);
  CHECK(std::get<attractor::Pattern>(label).distance == 0.0);

  traj.states.back().v.setZero();
  CHECK(std::holds_alternative<attractor::Origin>(classify_attractor(traj, xi, 1e-6)));
  traj.converged = false;
  CHECK(std::holds_alternative<attractor::Unconverged>(classify_attractor(traj, xi, 1e-6)));
}

TEST_CASE("capture radius and ball check") {
  Matrix m(4, 2);
  m << 1.0, -0.5, 0.2, 0.3, -1.0, 0.0, 0.5, 0.5;
  const InteractionMatrix xi(m);
  CHECK(capture_radius(xi, 1.0, 8.0) == doctest::Approx(std::log(2.0) / 2.0).epsilon(1e-15));
  CHECK(capture_radius(xi, 1.0, 8.0) == doctest::Approx(0.346574).epsilon(1e-6));
  CHECK_THROWS_AS(capture_radius(xi, 1.0, 4.0), InvalidArgument);
  CHECK_THROWS_AS(theorem1_ball_check(xi, 1.0, 3.0, 10, 0), InvalidArgument);
  CHECK(default_origin_tol(xi, 1.0, 8.0) == 1e-6);
  CHECK(default_origin_tol(xi, 1.0, 4.0 + 1e-9) < 1e-6);

  reclag::testing::Rng rng(7);
  for (int t = 0; t < 10; ++t) {
    const InteractionMatrix r(uniform_matrix(rng, 3 + t, 2 + t % 4));
    const BallCheckReport rep = theorem1_ball_check(r, 1.0 + t % 2 * 4.0, 2.0 * r.n_memory(), 1000, 100 + t);
    CHECK(rep.origin_fixed);
    CHECK(rep.all_captured);
    CHECK(rep.n_captured == 1000);
  }
}

TEST_CASE("gate closes inside the capture ball and reopens far away") {
  Matrix m(2, 2);
  m << 1.0, 1.0, -1.0, -1.0;
  const InteractionMatrix xi(m);
  const double eps = capture_radius(xi, 1.0, 4.0);
  Vector inside(2);
  inside << eps * 0.7, eps * 0.7;
  CHECK(reclag_update(xi, {inside, 0}, 1.0, 4.0).v.isZero(0.0));
  Vector outside(2);
  outside << 10.0, 10.0;
  CHECK_FALSE(reclag_update(xi, {outside, 0}, 1.0, 4.0).v.isZero(0.0));
}

TEST_CASE("trajectory gamma keeps the gate open") {
  const InteractionMatrix xi(Matrix::Identity(3, 2));
  Trajectory single;
  single.states.push_back({Vector::Zero(2), 0});
  CHECK(theorem2_gamma(xi, 1.0, single, 0.5) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK_THROWS_AS(theorem2_gamma(xi, 1.0, single, 1.0), InvalidArgument);

  reclag::testing::Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    const InteractionMatrix r(uniform_matrix(rng, 5, 3));
    const double beta = 1.0 + t % 4;
    FeatureState v{uniform_vector(rng, 3), 0};
    Trajectory van;
    van.states.push_back(v);
    for (int k = 0; k < 30; ++k) van.states.push_back(vanilla_update(r, van.states.back(), beta));
    const double gamma = theorem2_gamma(r, beta, van, 0.5);
    FeatureState w = v;
    for (int k = 1; k <= 30; ++k) {
      CHECK(gate_value(r, w.v, beta, gamma) >= -std::log(0.5) - 1e-12);
      w = reclag_update(r, w, beta, gamma);
      CHECK((w.v - van.states[static_cast<std::size_t>(k)].v).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("property: vanilla iterates stay inside the pattern bounds") {
  reclag::testing::Rng rng(9);
  for (int t = 0; t < 100; ++t) {
    const Matrix m = uniform_matrix(rng, 2 + t % 6, 2 + t % 3, -2.0, 2.0);
    const InteractionMatrix xi(m);
    FeatureState v{uniform_vector(rng, m.cols(), -10.0, 10.0), 0};
    const double bound = m.cwiseAbs().rowwise().maxCoeff().maxCoeff();
    for (int k = 0; k < 10; ++k) {
      v = vanilla_update(xi, v, 3.0);
      CHECK(v.v.cwiseAbs().maxCoeff() <= bound + 1e-12);
    }
  }
}

TEST_CASE("property: energy does not increase along fixed point runs") {
  reclag::testing::Rng rng(10);
  for (int t = 0; t < 100; ++t) {
    const InteractionMatrix xi(uniform_matrix(rng, 2 + t % 8, 2 + t % 5));
    const double beta = 0.5 + (t % 10) * 0.5;
    FixedPointOptions opts;
    opts.max_steps = 50;
    const Trajectory traj = run_to_fixed_point(xi, {uniform_vector(rng, xi.n_feature(), -3.0, 3.0), 0},
                                               LogSumExp{beta}, FeatureLagrangian::HalfSquare, opts);
    for (std::size_t k = 1; k < traj.energies.size(); ++k) {
      CHECK(traj.energies[k] <= traj.energies[k - 1] + 1e-9);
    }
  }
}

TEST_CASE("trajectory csv") {
  const InteractionMatrix xi(Matrix::Identity(2, 2));
  const Trajectory traj = run_to_fixed_point(xi, {Vector::Ones(2), 0}, LogSumExp{1.0}, FeatureLagrangian::HalfSquare);
  std::ostringstream out;
  write_trajectory_csv(out, traj);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "k,v0,v1,energy");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == traj.states.size());
}
