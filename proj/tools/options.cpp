#include "options.hpp"

#include <fmt/format.h>

#include <cctype>

namespace reclag::cli {

namespace {

template <typename T>
std::string show(const T& value) {
  if constexpr (std::is_same_v<T, std::string>) {
    return value;
  } else if constexpr (requires { value.has_value(); }) {
    return value ? show(*value) : std::string();
  } else {
    return fmt::format("{}", value);
  }
}

class Registrar {
 public:
  Registrar(CLI::App& app, Invocation& inv, std::string sub) : app_(app), inv_(inv), sub_(std::move(sub)) {}

  template <typename T>
  CLI::Option* add(const std::string& name, T& value, const std::string& help) {
    inv_.flag_values[sub_][name] = [&value] { return show(value); };
    return app_.add_option("--" + name, value, help)->envname(env_name(name))->capture_default_str();
  }

 private:
  CLI::App& app_;
  Invocation& inv_;
  std::string sub_;
};

void add_synth(CLI::App& app, Invocation& inv) {
  auto* sub = app.add_subcommand("synth", "Write Gaussian-cluster ID and ring OOD feature files");
  Registrar r(*sub, inv, "synth");
  auto& o = inv.synth;
  r.add("clusters", o.clusters, "number of Gaussian clusters");
  r.add("per-cluster", o.per_cluster, "points per cluster");
  r.add("dim", o.dim, "feature dimension");
  r.add("center-scale", o.center_scale, "cluster centres are uniform in [-s, s]^dim");
  r.add("sigma", o.sigma, "isotropic cluster noise");
  r.add("ring-n", o.ring_n, "number of ring (OOD) points");
  r.add("ring-inner", o.ring_inner, "inner ring radius");
  r.add("ring-outer", o.ring_outer, "outer ring radius");
  r.add("id-out", o.id_out, "ID feature file, relative to --out-dir");
  r.add("ood-out", o.ood_out, "OOD feature file, relative to --out-dir");
}

void add_train(CLI::App& app, Invocation& inv) {
  auto* sub = app.add_subcommand("train", "Train the interaction matrix on a feature file");
  Registrar r(*sub, inv, "train");
  auto& o = inv.train;
  r.add("input", o.input, "training feature file")->required();
  r.add("n-memory", o.n_memory, "number of memories N_H");
  r.add("beta", o.beta, "inverse temperature");
  r.add("gamma", o.gamma, "RecLag threshold (default 2 N_H)");
  r.add("gamma-tpr", o.gamma_tpr, "calibrate gamma so this fraction of the training rows keeps an open gate");
  r.add("gamma-steps", o.gamma_steps, "vanilla steps the calibrated rows must stay open for");
  r.add("epochs", o.epochs, "training epochs");
  r.add("lr", o.lr, "SGD learning rate");
  r.add("mc-samples", o.mc_samples, "memory indices sampled per feature (sampled estimator)");
  r.add("batch-size", o.batch_size, "minibatch size");
  r.add("norm", o.norm, "feature normalization target");
  r.add("estimator", o.estimator, "auto, exact or sampled")->check(CLI::IsMember({"auto", "exact", "sampled"}));
  r.add("partition-samples", o.partition_samples, "Monte Carlo samples for log Z (0 skips the estimate)");
  r.add("model-out", o.model_out, "model file, relative to --out-dir");
  r.add("loss-out", o.loss_out, "loss CSV, relative to --out-dir");
}

void add_eval(CLI::App& app, Invocation& inv) {
  auto* sub = app.add_subcommand("eval", "Score ID and OOD files and report FPR95/AUROC");
  Registrar r(*sub, inv, "eval");
  auto& o = inv.eval;
  r.add("model", o.model, "model file (reclag scorer)");
  r.add("id", o.id, "in-distribution feature file")->required();
  r.add("ood", o.ood, "out-of-distribution feature file")->required();
  r.add("scorer", o.scorer, "reclag, mhe, she, msp, energy or react")
      ->check(CLI::IsMember({"reclag", "mhe", "she", "msp", "energy", "react"}));
  r.add("bank", o.bank, "MHE/SHE patterns from ID class means or all ID class features")
      ->check(CLI::IsMember({"means", "features"}));
  r.add("clamp-percentile", o.clamp_percentile, "ReAct clamp as a percentile of ID activations");
  r.add("pair", o.pair, "dataset pair label in the metrics CSV");
  r.add("metrics-out", o.metrics_out, "metrics CSV, relative to --out-dir");
  r.add("roc-out", o.roc_out, "ROC CSV, relative to --out-dir");
}

void add_landscape(CLI::App& app, Invocation& inv) {
  auto* sub = app.add_subcommand("landscape", "Export the energy/gate grid of a 2-D model");
  Registrar r(*sub, inv, "landscape");
  auto& o = inv.landscape;
  r.add("model", o.model, "model file (default: built-in five-pattern demo)");
  r.add("lagrangian", o.lagrangian, "reclag or lse")->check(CLI::IsMember({"reclag", "lse"}));
  r.add("x-min", o.x_min, "grid bound");
  r.add("x-max", o.x_max, "grid bound");
  r.add("y-min", o.y_min, "grid bound");
  r.add("y-max", o.y_max, "grid bound");
  r.add("resolution", o.resolution, "grid points per axis");
  r.add("out", o.out, "landscape CSV, relative to --out-dir");
}

void add_verify(CLI::App& app, Invocation& inv) {
  auto* sub = app.add_subcommand("verify", "Run a property suite and report measured quantities");
  Registrar r(*sub, inv, "verify");
  auto& o = inv.verify;
  r.add("which", o.which, "thm1, thm2, thm3, energy-descent or gradients")
      ->required()
      ->check(CLI::IsMember({"thm1", "thm2", "thm3", "energy-descent", "gradients"}));
  r.add("n-memory", o.n_memory, "N_H of the random interaction matrices");
  r.add("n-feature", o.n_feature, "N_V of the random interaction matrices");
  r.add("beta", o.beta, "inverse temperature");
  r.add("gamma", o.gamma, "RecLag threshold (default 2 N_H)");
  r.add("trials", o.trials, "random instances");
  r.add("probes", o.probes, "capture-ball probes per instance (thm1)");
  r.add("steps", o.steps, "trajectory length (thm2, energy-descent)");
  r.add("delta", o.delta, "gamma scale below the trajectory minimum (thm2)");
  r.add("points", o.points, "random points (thm3)");
  r.add("report-out", o.report_out, "JSON report, relative to --out-dir");
}

void add_simulate(CLI::App& app, Invocation& inv) {
  auto* sub = app.add_subcommand("simulate", "Run the dynamics from every input row and label the attractors");
  Registrar r(*sub, inv, "simulate");
  auto& o = inv.simulate;
  r.add("model", o.model, "model file")->required();
  r.add("input", o.input, "feature file of starting states")->required();
  r.add("steps", o.steps, "step budget per sample");
  r.add("dynamics", o.dynamics, "reclag or vanilla")->check(CLI::IsMember({"reclag", "vanilla"}));
  r.add("gamma", o.gamma, "override the model's gamma");
  r.add("tol", o.tol, "fixed-point tolerance");
  r.add("max-trajectories", o.max_trajectories, "per-sample trajectory CSVs to write");
  r.add("trajectory-dir", o.trajectory_dir, "directory for trajectory CSVs, relative to --out-dir");
  r.add("summary-out", o.summary_out, "summary CSV, relative to --out-dir");
  r.add("scores-out", o.scores_out, "per-step score CSV, relative to --out-dir");
}

}  // namespace

std::string env_name(const std::string& flag) {
  std::string out = "RECLAG_";
  for (char c : flag) out.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return out;
}

void register_commands(CLI::App& app, Invocation& inv) {
  Registrar r(app, inv, "");
  r.add("seed", inv.global.seed, "random seed");
  r.add("out-dir", inv.global.out_dir, "directory for every output file and the manifest");
  r.add("threads", inv.global.threads, "worker threads for data-parallel work")->check(CLI::PositiveNumber);
  add_synth(app, inv);
  add_train(app, inv);
  add_eval(app, inv);
  add_landscape(app, inv);
  add_verify(app, inv);
  add_simulate(app, inv);
  app.require_subcommand(1);
}

}  // namespace reclag::cli
