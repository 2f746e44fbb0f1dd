#pragma once

// Binary feature files, model files, synthetic generators, and the 2-D
// landscape export.
//
// Feature file layout (all integers little-endian):
//   offset 0   char[4]  magic "RLFV"
//   offset 4   u32      version (1)
//   offset 8   u32      count
//   offset 12  u32      feature_dim
//   offset 16  u32      logit_dim (0 = no logits)
//   offset 20  u32      label_flag (0 or 1)
//   offset 24  u32[count] labels, present iff label_flag == 1
//   then count records of float32[feature_dim] followed by float32[logit_dim]

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "reclag/core.hpp"
#include "reclag/dataset.hpp"
#include "reclag/probability.hpp"
#include "reclag/trainer.hpp"

namespace reclag {

inline constexpr std::size_t kFeatureHeaderBytes = 24;

struct FeatureFileHeader {
  std::uint32_t version = 1;
  std::uint32_t count = 0;
  std::uint32_t feature_dim = 0;
  std::uint32_t logit_dim = 0;
  std::uint32_t label_flag = 0;

  /// Total encoded size implied by the header, including the header itself.
  std::uint64_t encoded_size() const;
};

std::vector<std::byte> encode_features(const Dataset& data);

/// Decodes one feature block starting at bytes[0]; `consumed` receives its
/// length. Trailing bytes are left to the caller.
Dataset decode_features(std::span<const std::byte> bytes, std::size_t& consumed);

FeatureFileHeader read_feature_header(std::span<const std::byte> bytes);

void write_features(const std::filesystem::path& path, const Dataset& data);

/// Rejects files whose size differs from the size implied by the header.
Dataset read_features(const std::filesystem::path& path);

/// Trained model: the interaction matrix as an embedded feature block
/// followed by a metadata block ("RLMD") with beta, gamma, radius, feature
/// normalization, the optional log-partition estimate, and the emission.
struct ModelFile {
  DensityModel model;
  GaussianEmission emission;
};

std::vector<std::byte> encode_model(const ModelFile& file);
ModelFile decode_model(std::span<const std::byte> bytes);
void write_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile read_model(const std::filesystem::path& path);

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes);

/// Gaussian clusters with centers uniform in [-center_scale, center_scale]^dim
/// at pairwise distance >= 4 noise_sigma. Labels are the cluster index.
Dataset gen_gaussian_mixture(std::size_t n_clusters, std::size_t per_cluster, Eigen::Index dim, double center_scale,
                             double noise_sigma, std::uint64_t seed);

/// Uniform samples from the annulus r_inner <= |x| <= r_outer.
Dataset gen_uniform_ring(std::size_t n, Eigen::Index dim, double r_inner, double r_outer, std::uint64_t seed);

struct LandscapeBounds {
  double x_min = -2.5;
  double x_max = 2.5;
  double y_min = -2.5;
  double y_max = 2.5;
};

struct LandscapeRow {
  double x = 0.0;
  double y = 0.0;
  double energy = 0.0;
  double gate = 0.0;
  bool basin = false;
  double log_density_unnormalized = 0.0;  ///< log gamma + G
};

/// Row-major grid: rows[j * resolution + i] sits at (x_i, y_j).
struct LandscapeGrid {
  LandscapeBounds bounds;
  std::size_t resolution = 0;
  std::vector<LandscapeRow> rows;

  const LandscapeRow& at(std::size_t i, std::size_t j) const { return rows[j * resolution + i]; }
};

/// Evaluates the adiabatic energy under `mem`, the gate, basin membership,
/// and log gamma + G on a resolution x resolution grid. Needs N_V = 2.
LandscapeGrid export_landscape(const DensityModel& model, const MemoryLagrangian& mem, const LandscapeBounds& bounds,
                               std::size_t resolution);

/// Five patterns at norm 1.5, beta = 3, gamma = 1.2 N_H.
DensityModel landscape_demo_model();

void write_landscape_csv(std::ostream& out, const LandscapeGrid& grid);

}  // namespace reclag
