#include "verify.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"
#include "reclag/dynamics.hpp"
#include "reclag/energy.hpp"
#include "reclag/parallel.hpp"
#include "reclag/probability.hpp"
#include "reclag/random.hpp"

namespace reclag::cli {

namespace {

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

Vector random_vector(Rng& rng, Eigen::Index n, double lo = -1.0, double hi = 1.0) {
  return random_matrix(rng, n, 1, lo, hi).col(0);
}

double resolved_gamma(const VerifyOptions& o) { return o.gamma.value_or(2.0 * static_cast<double>(o.n_memory)); }

void check_sizes(const VerifyOptions& o) {
  detail::require(o.n_memory > 0 && o.n_feature > 0, "--n-memory and --n-feature must be positive");
  detail::require(o.trials > 0, "--trials must be positive");
  detail::require(o.beta > 0.0, "--beta must be positive");
}

std::vector<CheckResult> verify_thm1(const VerifyOptions& o, std::uint64_t seed, unsigned threads) {
  const double gamma = resolved_gamma(o);
  if (!(gamma > static_cast<double>(o.n_memory))) {
    throw InvalidArgument(fmt::format("thm1 needs gamma > N_H (got gamma = {}, N_H = {}); the origin is not an attractor",
                                      gamma, o.n_memory));
  }
  std::vector<CheckResult> out(o.trials);
  parallel_for(o.trials, threads, [&](std::size_t t) {
    Rng rng(seed + t);
    const InteractionMatrix xi(random_matrix(rng, o.n_memory, o.n_feature));
    const auto r = theorem1_ball_check(xi, o.beta, gamma, o.probes, seed + 7919 * (t + 1));
    out[t] = {fmt::format("ball capture #{}", t),
              r.origin_fixed && r.all_captured,
              {{"epsilon", r.epsilon}, {"captured", static_cast<double>(r.n_captured)},
               {"probes", static_cast<double>(r.n_probes)}}};
  });
  return out;
}

std::vector<CheckResult> verify_thm2(const VerifyOptions& o, std::uint64_t seed, unsigned threads) {
  detail::require(o.delta > 0.0 && o.delta <= 1.0, "--delta must lie in (0, 1]");
  std::vector<CheckResult> out(o.trials);
  parallel_for(o.trials, threads, [&](std::size_t t) {
    Rng rng(seed + t);
    const InteractionMatrix xi(random_matrix(rng, o.n_memory, o.n_feature));
    const Vector v0 = random_vector(rng, o.n_feature);
    const FeatureState start{v0, 0};
    const MemoryState h0{xi.project(v0)};
    const HopfieldConfig cfg{};
    const auto vanilla =
        integrate_two_body(xi, start, h0, LogSumExp{o.beta}, FeatureLagrangian::HalfSquare, cfg, o.steps, false);
    const double gamma = theorem2_gamma(xi, o.beta, vanilla, o.delta);
    const auto gated =
        integrate_two_body(xi, start, h0, RecLag{o.beta, gamma}, FeatureLagrangian::HalfSquare, cfg, o.steps, false);
    double deviation = 0.0;
    for (std::size_t k = 0; k < vanilla.states.size(); ++k) {
      deviation = std::max(deviation, (vanilla.states[k].v - gated.states[k].v).cwiseAbs().maxCoeff());
    }
    out[t] = {fmt::format("vanilla agreement #{}", t),
              deviation == 0.0 && gated.states.size() == vanilla.states.size(),
              {{"gamma", gamma}, {"sup_norm_deviation", deviation}}};
  });
  return out;
}

std::vector<CheckResult> verify_thm3(const VerifyOptions& o, std::uint64_t seed, unsigned threads) {
  const double gamma = resolved_gamma(o);
  const std::size_t per_trial = (o.points + o.trials - 1) / o.trials;
  std::vector<CheckResult> out(o.trials);
  parallel_for(o.trials, threads, [&](std::size_t t) {
    Rng rng(seed + t);
    DensityModel m{InteractionMatrix(random_matrix(rng, o.n_memory, o.n_feature)), o.beta, gamma, 2.0, std::nullopt, 0.0};
    m.log_partition = estimate_log_partition(m, 2000, seed + t);
    const double log_z = m.log_partition->estimate;
    double identity = 0.0;
    double marginal = 0.0;
    bool basin_ok = true;
    const std::size_t n = std::min(per_trial, o.points - std::min(o.points, t * per_trial));
    for (std::size_t i = 0; i < n; ++i) {
      const Vector x = random_vector(rng, o.n_feature, -2.0, 2.0);
      const double g = gate_value(m.xi, x, m.beta, m.gamma);
      const double ld = log_density(m, x);
      identity = std::max(identity, std::abs(ld - (std::log(m.gamma) + g - log_z)) / std::max(1.0, std::abs(ld)));
      Vector joint(m.n_memory());
      for (Eigen::Index mu = 0; mu < m.n_memory(); ++mu) joint[mu] = log_joint_unnormalized(m, x, mu);
      marginal = std::max(marginal, std::abs(stable_log_sum_exp(joint) - log_z - ld) / std::max(1.0, std::abs(ld)));
      if (std::abs(g) > 1e-9) basin_ok = basin_ok && (in_basin(m, x) == (ld < std::log(m.gamma) - log_z));
    }
    out[t] = {fmt::format("density identity #{}", t),
              identity <= 1e-9 && marginal <= 1e-9 && basin_ok,
              {{"points", static_cast<double>(n)}, {"max_identity_residual", identity},
               {"max_marginal_residual", marginal}}};
  });
  return out;
}

std::vector<CheckResult> verify_energy_descent(const VerifyOptions& o, std::uint64_t seed, unsigned threads) {
  const double gamma = resolved_gamma(o);
  std::vector<CheckResult> out(o.trials);
  parallel_for(o.trials, threads, [&](std::size_t t) {
    Rng rng(seed + t);
    const InteractionMatrix xi(random_matrix(rng, o.n_memory, o.n_feature));
    const Vector v0 = random_vector(rng, o.n_feature, -2.0, 2.0);
    const MemoryLagrangian mem = t % 2 == 0 ? MemoryLagrangian(RecLag{o.beta, gamma}) : MemoryLagrangian(LogSumExp{o.beta});
    FixedPointOptions fp;
    fp.max_steps = o.steps;
    const auto traj = run_to_fixed_point(xi, FeatureState{v0, 0}, mem, FeatureLagrangian::HalfSquare, fp);
    double worst = -std::numeric_limits<double>::infinity();
    bool ok = true;
    for (std::size_t k = 1; k < traj.energies.size(); ++k) {
      const double rise = traj.energies[k] - traj.energies[k - 1];
      worst = std::max(worst, rise);
      ok = ok && rise <= 1e-9 * std::max(1.0, std::abs(traj.energies[k - 1]));
    }
    out[t] = {fmt::format("energy descent #{} ({})", t, t % 2 == 0 ? "reclag" : "lse"),
              ok,
              {{"steps", static_cast<double>(traj.steps_taken)}, {"max_energy_rise", traj.energies.size() > 1 ? worst : 0.0}}};
  });
  return out;
}

double central_difference_error(const std::function<double(const Vector&)>& f, const Vector& analytic, const Vector& x) {
  double worst = 0.0;
  const double step = 1e-5;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector up = x;
    Vector down = x;
    up[i] += step;
    down[i] -= step;
    const double fd = (f(up) - f(down)) / (2.0 * step);
    worst = std::max(worst, std::abs(fd - analytic[i]) / std::max(1e-3, std::abs(analytic[i])));
  }
  return worst;
}

std::vector<CheckResult> verify_gradients(const VerifyOptions& o, std::uint64_t seed, unsigned) {
  const double gamma = resolved_gamma(o);
  struct Case {
    std::string name;
    MemoryLagrangian mem;
  };
  const std::vector<Case> memory_cases = {
      {"lse", LogSumExp{o.beta}},
      {"reclag", RecLag{o.beta, gamma}},
      {"additive square", AdditiveSigma{Sigma::square()}},
      {"additive cube", AdditiveSigma{Sigma::power(3)}},
  };
  std::vector<CheckResult> out;
  Rng rng(seed);
  for (const auto& c : memory_cases) {
    double worst = 0.0;
    std::size_t checked = 0;
    while (checked < o.trials) {
      const Vector h = random_vector(rng, o.n_memory, -2.0, 2.0);
      if (const auto* r = std::get_if<RecLag>(&c.mem)) {
        // the max(., 0) kink has no derivative
        if (std::abs(gate_from_memory(h, r->beta, r->gamma)) <= 1e-3 * r->beta) continue;
      }
      const auto f = [&](const Vector& y) { return eval_memory_lagrangian(c.mem, y); };
      worst = std::max(worst, central_difference_error(f, memory_activation(c.mem, h), h));
      ++checked;
    }
    out.push_back({"memory activation: " + c.name, worst <= 1e-5, {{"max_relative_error", worst}}});
  }
  for (const auto feat : {FeatureLagrangian::HalfSquare, FeatureLagrangian::AbsSum}) {
    double worst = 0.0;
    std::size_t checked = 0;
    while (checked < o.trials) {
      const Vector v = random_vector(rng, o.n_feature, -2.0, 2.0);
      if (feat == FeatureLagrangian::AbsSum && v.cwiseAbs().minCoeff() < 1e-3) continue;
      const auto f = [&](const Vector& y) { return eval_feature_lagrangian(feat, y); };
      worst = std::max(worst, central_difference_error(f, feature_activation(feat, v), v));
      ++checked;
    }
    out.push_back({feat == FeatureLagrangian::HalfSquare ? "feature activation: half square" : "feature activation: abs sum",
                   worst <= 1e-5,
                   {{"max_relative_error", worst}}});
  }
  return out;
}

}  // namespace

bool VerifyReport::passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

VerifyReport run_verify(const VerifyOptions& opts, std::uint64_t seed, unsigned threads) {
  check_sizes(opts);
  VerifyReport report{opts.which, {}};
  if (opts.which == "thm1") {
    report.checks = verify_thm1(opts, seed, threads);
  } else if (opts.which == "thm2") {
    report.checks = verify_thm2(opts, seed, threads);
  } else if (opts.which == "thm3") {
    detail::require(opts.points > 0, "--points must be positive");
    report.checks = verify_thm3(opts, seed, threads);
  } else if (opts.which == "energy-descent") {
    report.checks = verify_energy_descent(opts, seed, threads);
  } else if (opts.which == "gradients") {
    report.checks = verify_gradients(opts, seed, threads);
  } else {
    throw InvalidArgument("unknown suite '" + opts.which + "'");
  }
  return report;
}

std::string report_json(const VerifyReport& report) {
  nlohmann::ordered_json j;
  j["which"] = report.which;
  j["passed"] = report.passed();
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : report.checks) {
    nlohmann::ordered_json m = nlohmann::ordered_json::object();
    for (const auto& [k, v] : c.measured) m[k] = v;
    j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"measured", m}});
  }
  return j.dump(2) + "\n";
}

}  // namespace reclag::cli
