#pragma once

// Flag definitions for every subcommand. Each flag can also come from an
// environment variable RECLAG_<NAME> (dashes become underscores); an explicit
// flag wins over the environment, which wins over the built-in default.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"

namespace reclag::cli {

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  unsigned threads = 1;
};

struct SynthOptions {
  std::size_t clusters = 3;
  std::size_t per_cluster = 500;
  int dim = 2;
  double center_scale = 10.0;
  double sigma = 0.2;
  std::size_t ring_n = 1500;
  double ring_inner = 5.0;
  double ring_outer = 15.0;
  std::string id_out = "id.rlfv";
  std::string ood_out = "ood.rlfv";
};

struct TrainOptions {
  std::string input;
  long n_memory = 250;
  double beta = 5.0;
  std::optional<double> gamma;
  std::optional<double> gamma_tpr;
  std::size_t gamma_steps = 0;
  std::size_t epochs = 100;
  double lr = 0.05;
  std::size_t mc_samples = 5;
  std::size_t batch_size = 128;
  double norm = 10.0;
  std::string estimator = "auto";
  std::size_t partition_samples = 0;
  std::string model_out = "model.rlm";
  std::string loss_out = "loss.csv";
};

struct EvalOptions {
  std::string model;
  std::string id;
  std::string ood;
  std::string scorer = "reclag";
  std::string bank = "means";
  double clamp_percentile = 0.9;
  std::string pair = "id_vs_ood";
  std::string metrics_out = "metrics.csv";
  std::string roc_out = "roc.csv";
};

struct LandscapeOptions {
  std::string model;
  std::string lagrangian = "reclag";
  double x_min = -2.5;
  double x_max = 2.5;
  double y_min = -2.5;
  double y_max = 2.5;
  std::size_t resolution = 128;
  std::string out = "landscape.csv";
};

struct VerifyOptions {
  std::string which;
  long n_memory = 16;
  long n_feature = 8;
  double beta = 1.0;
  std::optional<double> gamma;
  std::size_t trials = 20;
  std::size_t probes = 1000;
  std::size_t steps = 100;
  double delta = 0.5;
  std::size_t points = 10000;
  std::string report_out = "verify.json";
};

struct SimulateOptions {
  std::string model;
  std::string input;
  std::size_t steps = 4;
  std::string dynamics = "reclag";
  std::optional<double> gamma;
  double tol = 1e-8;
  std::size_t max_trajectories = 16;
  std::string trajectory_dir = "trajectories";
  std::string summary_out = "summary.csv";
  std::string scores_out = "scores.csv";
};

struct Invocation {
  GlobalOptions global;
  SynthOptions synth;
  TrainOptions train;
  EvalOptions eval;
  LandscapeOptions landscape;
  VerifyOptions verify;
  SimulateOptions simulate;

  /// Resolved flag values by subcommand ("" for the global flags), read
  /// after parsing to fill the manifest.
  std::map<std::string, std::map<std::string, std::function<std::string()>>> flag_values;
};

/// "RECLAG_" + upper-cased name with '-' replaced by '_'.
std::string env_name(const std::string& flag);

/// Registers the global flags and all subcommands on `app`.
void register_commands(CLI::App& app, Invocation& inv);

}  // namespace reclag::cli
