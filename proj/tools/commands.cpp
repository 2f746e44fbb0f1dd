#include "commands.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "manifest.hpp"
#include "options.hpp"
#include "reclag/dynamics.hpp"
#include "reclag/energy.hpp"
#include "reclag/io_data.hpp"
#include "reclag/ood.hpp"
#include "reclag/parallel.hpp"
#include "reclag/probability.hpp"
#include "reclag/trainer.hpp"
#include "verify.hpp"

namespace fs = std::filesystem;

namespace reclag::cli {

namespace {

class VerifyFailed : public Error {
 public:
  using Error::Error;
};

struct Context {
  const GlobalOptions& global;
  Manifest& manifest;
  std::ostream& out;

  fs::path output(const std::string& rel) const { return fs::path(global.out_dir) / rel; }

  std::ofstream open(const fs::path& path) const {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write " + path.string());
    return f;
  }

  void record(const fs::path& path) const { manifest.add_artifact(path, global.out_dir); }
};

void cmd_synth(const Context& ctx, const SynthOptions& o) {
  detail::require(o.dim > 0, "--dim must be positive");
  const Dataset id = gen_gaussian_mixture(o.clusters, o.per_cluster, o.dim, o.center_scale, o.sigma, ctx.global.seed);
  const Dataset ood = gen_uniform_ring(o.ring_n, o.dim, o.ring_inner, o.ring_outer, ctx.global.seed + 1000);
  const auto id_path = ctx.output(o.id_out);
  const auto ood_path = ctx.output(o.ood_out);
  for (const auto& p : {id_path, ood_path})
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_features(id_path, id);
  write_features(ood_path, ood);
  ctx.record(id_path);
  ctx.record(ood_path);
  fmt::print(ctx.out, "wrote {} ID rows to {} and {} OOD rows to {}\n", id.size(), id_path.string(), ood.size(),
             ood_path.string());
}

Estimator parse_estimator(const std::string& name) {
  if (name == "exact") return Estimator::Exact;
  if (name == "sampled") return Estimator::Sampled;
  return Estimator::Auto;
}

void cmd_train(const Context& ctx, const TrainOptions& o) {
  const Dataset data = read_features(o.input);
  TrainerConfig cfg;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.lr;
  cfg.mc_samples = o.mc_samples;
  cfg.beta = o.beta;
  cfg.gamma = o.gamma;
  cfg.n_memory = o.n_memory;
  cfg.batch_size = o.batch_size;
  cfg.seed = ctx.global.seed;
  cfg.feature_norm_target = o.norm;
  cfg.estimator = parse_estimator(o.estimator);

  TrainResult result = train(data, cfg);
  DensityModel& model = result.model;
  if (o.gamma_tpr) model.gamma = calibrate_gamma(model, data, *o.gamma_tpr, o.gamma_steps);
  if (o.partition_samples > 0) model.log_partition = estimate_log_partition(model, o.partition_samples, ctx.global.seed);

  const auto model_path = ctx.output(o.model_out);
  if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
  write_model(model_path, ModelFile{model, result.emission});
  const auto loss_path = ctx.output(o.loss_out);
  {
    auto f = ctx.open(loss_path);
    write_loss_csv(f, result.loss_history);
  }
  ctx.record(model_path);
  ctx.record(loss_path);
  fmt::print(ctx.out, "trained {} memories for {} epochs; final mean log-objective {}; gamma {}\n", model.n_memory(),
             result.loss_history.size(), result.loss_history.empty() ? 0.0 : result.loss_history.back(), model.gamma);
}

void cmd_eval(const Context& ctx, const EvalOptions& o) {
  const Dataset id = read_features(o.id);
  const Dataset ood = read_features(o.ood);
  Scorer scorer;
  scorer.kind = parse_scorer(o.scorer);
  switch (scorer.kind) {
    case ScorerKind::RecLag:
      if (o.model.empty()) throw InvalidArgument("the reclag scorer needs --model");
      scorer.model = read_model(o.model).model;
      break;
    case ScorerKind::Mhe:
    case ScorerKind::She:
      scorer.bank = o.bank == "features" ? ClassPatternBank::from_class_features(id) : ClassPatternBank::from_class_means(id);
      break;
    case ScorerKind::React:
      scorer.head = fit_linear_head(id);
      scorer.react_clamp = activation_percentile(id, o.clamp_percentile);
      break;
    case ScorerKind::Msp:
    case ScorerKind::Energy:
      break;
  }
  const DetectionMetrics m = evaluate_detector(scorer, id, ood, ctx.global.threads);
  const auto metrics_path = ctx.output(o.metrics_out);
  const auto roc_path = ctx.output(o.roc_out);
  {
    auto f = ctx.open(metrics_path);
    write_metrics_header(f);
    write_metrics_row(f, m, o.pair);
  }
  {
    auto f = ctx.open(roc_path);
    write_roc_csv(f, m);
  }
  ctx.record(metrics_path);
  ctx.record(roc_path);
  fmt::print(ctx.out, "scorer={} fpr95={:.6f} auroc={:.6f}\n", m.scorer, m.fpr95, m.auroc);
}

void cmd_landscape(const Context& ctx, const LandscapeOptions& o) {
  const DensityModel model = o.model.empty() ? landscape_demo_model() : read_model(o.model).model;
  const MemoryLagrangian mem =
      o.lagrangian == "lse" ? MemoryLagrangian(LogSumExp{model.beta}) : MemoryLagrangian(RecLag{model.beta, model.gamma});
  const LandscapeGrid grid = export_landscape(model, mem, LandscapeBounds{o.x_min, o.x_max, o.y_min, o.y_max}, o.resolution);
  const auto path = ctx.output(o.out);
  {
    auto f = ctx.open(path);
    write_landscape_csv(f, grid);
  }
  ctx.record(path);
  const auto basin = std::count_if(grid.rows.begin(), grid.rows.end(), [](const LandscapeRow& r) { return r.basin; });
  fmt::print(ctx.out, "wrote {} grid points ({} in the origin basin) to {}\n", grid.rows.size(), basin, path.string());
}

void cmd_verify(const Context& ctx, const VerifyOptions& o) {
  const VerifyReport report = run_verify(o, ctx.global.seed, ctx.global.threads);
  for (const auto& c : report.checks) {
    std::string measured;
    for (const auto& [k, v] : c.measured) measured += fmt::format(" {}={:.6g}", k, v);
    fmt::print(ctx.out, "[{}] {}:{}\n", c.pass ? "pass" : "FAIL", c.name, measured);
  }
  const auto path = ctx.output(o.report_out);
  {
    auto f = ctx.open(path);
    f << report_json(report);
  }
  ctx.record(path);
  const auto failed = std::count_if(report.checks.begin(), report.checks.end(), [](const CheckResult& c) { return !c.pass; });
  fmt::print(ctx.out, "{}: {} of {} checks passed\n", o.which, report.checks.size() - static_cast<std::size_t>(failed),
             report.checks.size());
  if (!report.passed()) throw VerifyFailed(fmt::format("{} failed {} check(s)", o.which, failed));
}

std::string attractor_text(const AttractorLabel& label, std::string& index, std::string& distance) {
  if (const auto* p = std::get_if<attractor::Pattern>(&label)) {
    index = fmt::format("{}", p->index);
    distance = fmt::format("{}", p->distance);
    return "pattern";
  }
  return std::holds_alternative<attractor::Origin>(label) ? "origin" : "unconverged";
}

void cmd_simulate(const Context& ctx, const SimulateOptions& o) {
  detail::require(o.steps > 0, "--steps must be positive");
  DensityModel model = read_model(o.model).model;
  if (o.gamma) model.gamma = *o.gamma;
  model.validate();
  const Dataset data = read_features(o.input);
  detail::require_dim(data.dim(), model.n_feature(), "input feature dimension");
  const MemoryLagrangian mem = o.dynamics == "vanilla" ? MemoryLagrangian(LogSumExp{model.beta})
                                                       : MemoryLagrangian(RecLag{model.beta, model.gamma});
  const double origin_tol = default_origin_tol(model.xi, model.beta, model.gamma);
  FixedPointOptions fp;
  fp.tol = o.tol;
  fp.max_steps = o.steps;

  const auto n = static_cast<std::size_t>(data.size());
  std::vector<Trajectory> trajs(n);
  parallel_for(n, ctx.global.threads, [&](std::size_t i) {
    const Vector x = data.sample(static_cast<Eigen::Index>(i));
    // the origin has no direction to normalize
    const Vector v0 = x.norm() > 0.0 ? model.prepare(x) : x;
    trajs[i] = run_to_fixed_point(model.xi, FeatureState{v0, 0}, mem, FeatureLagrangian::HalfSquare, fp);
  });

  const auto summary_path = ctx.output(o.summary_out);
  const auto scores_path = ctx.output(o.scores_out);
  std::size_t origin = 0;
  {
    auto summary = ctx.open(summary_path);
    auto scores = ctx.open(scores_path);
    summary << "sample,attractor,pattern,distance,steps,final_score\n";
    scores << "sample,step,reclag_score,modern_energy\n";
    for (std::size_t i = 0; i < n; ++i) {
      const auto& t = trajs[i];
      std::string index;
      std::string distance;
      const auto label = attractor_text(classify_attractor(t, model.xi, origin_tol), index, distance);
      origin += label == "origin" ? 1 : 0;
      fmt::print(summary, "{},{},{},{},{},{}\n", i, label, index, distance, t.steps_taken,
                 ood_score(model, t.final_state().v));
      for (const auto& s : t.states) {
        fmt::print(scores, "{},{},{},{}\n", i, s.step, ood_score(model, s.v), modern_energy(model.xi, s.v, model.beta));
      }
    }
  }
  ctx.record(summary_path);
  ctx.record(scores_path);
  for (std::size_t i = 0; i < std::min(n, o.max_trajectories); ++i) {
    const auto path = ctx.output(o.trajectory_dir) / fmt::format("sample_{}.csv", i);
    {
      auto f = ctx.open(path);
      write_trajectory_csv(f, trajs[i]);
    }
    ctx.record(path);
  }
  fmt::print(ctx.out, "simulated {} samples for up to {} steps; {} reached the origin\n", n, o.steps, origin);
}

void dispatch(const std::string& name, const Context& ctx, const Invocation& inv) {
  if (name == "synth") return cmd_synth(ctx, inv.synth);
  if (name == "train") return cmd_train(ctx, inv.train);
  if (name == "eval") return cmd_eval(ctx, inv.eval);
  if (name == "landscape") return cmd_landscape(ctx, inv.landscape);
  if (name == "verify") return cmd_verify(ctx, inv.verify);
  if (name == "simulate") return cmd_simulate(ctx, inv.simulate);
  throw InvalidArgument("unknown command " + name);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Modern Hopfield networks with an origin attractor for out-of-distribution inputs", "reclag"};
  app.option_defaults()->always_capture_default();
  Invocation inv;
  register_commands(app, inv);
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  Manifest manifest(name, inv.global.seed);
  for (const auto* sub : {"", name.c_str()}) {
    for (const auto& [flag, value] : inv.flag_values[sub]) manifest.set_flag(flag, value());
  }
  try {
    fs::create_directories(inv.global.out_dir);
    const Context ctx{inv.global, manifest, out};
    dispatch(name, ctx, inv);
    manifest.write(fs::path(inv.global.out_dir) / (name + ".manifest.json"));
    return kExitOk;
  } catch (const DivergenceError& e) {
    fmt::print(err, "error: numerical failure: {}\n", e.what());
    return kExitNumerical;
  } catch (const VerifyFailed& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kExitInput;
  }
}

}  // namespace reclag::cli
