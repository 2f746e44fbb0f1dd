#include "reclag/io_data.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>

#include "reclag/energy.hpp"
#include "reclag/random.hpp"

namespace reclag {

namespace {

constexpr char kFeatureMagic[4] = {'R', 'L', 'F', 'V'};
constexpr char kModelMagic[4] = {'R', 'L', 'M', 'D'};
constexpr std::uint32_t kVersion = 1;

class ByteWriter {
 public:
  void magic(const char (&m)[4]) {
    for (char c : m) buf_.push_back(static_cast<std::byte>(c));
  }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void append(std::span<const std::byte> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }
  std::vector<std::byte> take() { return std::move(buf_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffu));
  }
  std::vector<std::byte> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  void expect_magic(const char (&m)[4], const char* what) {
    need(4, what);
    for (int i = 0; i < 4; ++i) {
      if (bytes_[pos_ + static_cast<std::size_t>(i)] != static_cast<std::byte>(m[i])) {
        throw FormatError(fmt::format("bad {} magic at offset {}", what, pos_ + static_cast<std::size_t>(i)));
      }
    }
    pos_ += 4;
  }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(get(4, what)); }
  std::uint64_t u64(const char* what) { return get(8, what); }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(fmt::format("truncated input reading {} at offset {}", what, pos_));
    }
  }
  std::uint64_t get(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(std::to_integer<std::uint8_t>(bytes_[pos_ + static_cast<std::size_t>(i)]))
           << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t checked_u32(Eigen::Index v, const char* what) {
  if (v < 0 || static_cast<std::uint64_t>(v) > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidArgument(fmt::format("{} {} does not fit the file format", what, v));
  }
  return static_cast<std::uint32_t>(v);
}

FeatureFileHeader parse_header(ByteReader& r) {
  r.expect_magic(kFeatureMagic, "feature file");
  FeatureFileHeader h;
  h.version = r.u32("version");
  if (h.version != kVersion) throw FormatError(fmt::format("unsupported feature file version {} at offset 4", h.version));
  h.count = r.u32("count");
  h.feature_dim = r.u32("feature_dim");
  h.logit_dim = r.u32("logit_dim");
  h.label_flag = r.u32("label_flag");
  if (h.label_flag > 1) throw FormatError(fmt::format("label_flag must be 0 or 1 at offset 20, got {}", h.label_flag));
  return h;
}

}  // namespace

std::uint64_t FeatureFileHeader::encoded_size() const {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t per_record = (static_cast<std::uint64_t>(feature_dim) + logit_dim) * 4u;
  const std::uint64_t fixed = kFeatureHeaderBytes + (label_flag ? 4ull * count : 0ull);
  if (count != 0 && per_record > (kMax - fixed) / count) throw FormatError("feature file dimensions overflow");
  return fixed + per_record * count;
}

std::vector<std::byte> encode_features(const Dataset& data) {
  data.validate();
  ByteWriter w;
  w.magic(kFeatureMagic);
  w.u32(kVersion);
  w.u32(checked_u32(data.size(), "count"));
  w.u32(checked_u32(data.dim(), "feature_dim"));
  w.u32(data.logits ? checked_u32(data.logits->cols(), "logit_dim") : 0u);
  w.u32(data.labels ? 1u : 0u);
  if (data.labels) {
    for (auto l : *data.labels) w.u32(l);
  }
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.dim(); ++j) w.f32(static_cast<float>(data.features(i, j)));
    if (data.logits) {
      for (Eigen::Index j = 0; j < data.logits->cols(); ++j) w.f32(static_cast<float>((*data.logits)(i, j)));
    }
  }
  return w.take();
}

FeatureFileHeader read_feature_header(std::span<const std::byte> bytes) {
  ByteReader r(bytes);
  return parse_header(r);
}

Dataset decode_features(std::span<const std::byte> bytes, std::size_t& consumed) {
  ByteReader r(bytes);
  const FeatureFileHeader h = parse_header(r);
  const std::uint64_t size = h.encoded_size();
  if (size > bytes.size()) {
    throw FormatError(fmt::format("truncated feature payload: header implies {} bytes, {} available", size,
                                  bytes.size()));
  }
  Dataset d;
  d.features.resize(h.count, h.feature_dim);
  if (h.logit_dim > 0) d.logits = Matrix(h.count, h.logit_dim);
  if (h.label_flag) {
    d.labels.emplace(h.count);
    for (auto& l : *d.labels) l = r.u32("label");
  }
  for (std::uint32_t i = 0; i < h.count; ++i) {
    for (std::uint32_t j = 0; j < h.feature_dim; ++j) d.features(i, j) = r.f32("feature");
    for (std::uint32_t j = 0; j < h.logit_dim; ++j) (*d.logits)(i, j) = r.f32("logit");
  }
  consumed = r.pos();
  return d;
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument(fmt::format("cannot open '{}' for reading", path.string()));
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw FormatError(fmt::format("failed to read '{}'", path.string()));
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument(fmt::format("cannot open '{}' for writing", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(fmt::format("failed to write '{}'", path.string()));
}

void write_features(const std::filesystem::path& path, const Dataset& data) {
  write_file_bytes(path, encode_features(data));
}

Dataset read_features(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  const FeatureFileHeader h = read_feature_header(bytes);
  if (h.encoded_size() != bytes.size()) {
    throw FormatError(fmt::format("'{}': header implies {} bytes but the file has {}", path.string(),
                                  h.encoded_size(), bytes.size()));
  }
  std::size_t consumed = 0;
  return decode_features(bytes, consumed);
}

std::vector<std::byte> encode_model(const ModelFile& file) {
  const DensityModel& m = file.model;
  m.validate();
  detail::require_dim(file.emission.log_variances.size(), m.n_feature(), "emission log-variances");
  Dataset rows;
  rows.features = m.xi.values();
  ByteWriter w;
  w.append(encode_features(rows));
  w.magic(kModelMagic);
  w.u32(kVersion);
  w.f64(m.beta);
  w.f64(m.gamma);
  w.f64(m.sphere_radius);
  w.f64(m.feature_norm);
  w.u32(m.log_partition ? 1u : 0u);
  const LogPartition lp = m.log_partition.value_or(LogPartition{});
  w.f64(lp.estimate);
  w.f64(lp.std_error);
  w.u64(lp.n_samples);
  w.u64(lp.seed);
  w.u32(checked_u32(file.emission.log_variances.size(), "emission dimension"));
  for (Eigen::Index i = 0; i < file.emission.log_variances.size(); ++i) w.f64(file.emission.log_variances[i]);
  return w.take();
}

ModelFile decode_model(std::span<const std::byte> bytes) {
  std::size_t consumed = 0;
  Dataset rows = decode_features(bytes, consumed);
  if (rows.size() == 0 || rows.dim() == 0) throw FormatError("model file has an empty interaction matrix");
  ByteReader r(bytes.subspan(consumed));
  r.expect_magic(kModelMagic, "model metadata");
  const auto version = r.u32("model version");
  if (version != kVersion) throw FormatError(fmt::format("unsupported model version {}", version));
  const double beta = r.f64("beta");
  const double gamma = r.f64("gamma");
  const double radius = r.f64("sphere_radius");
  const double feature_norm = r.f64("feature_norm");
  const bool has_partition = r.u32("partition flag") != 0;
  LogPartition lp;
  lp.estimate = r.f64("log partition");
  lp.std_error = r.f64("log partition std error");
  lp.n_samples = r.u64("log partition samples");
  lp.seed = r.u64("log partition seed");
  const auto n_var = r.u32("emission dimension");
  if (n_var != rows.dim()) throw FormatError("emission dimension does not match the interaction matrix");
  GaussianEmission emission{Vector(n_var)};
  for (std::uint32_t i = 0; i < n_var; ++i) emission.log_variances[i] = r.f64("log variance");
  if (r.remaining() != 0) throw FormatError(fmt::format("{} trailing bytes after model metadata", r.remaining()));

  DensityModel model{InteractionMatrix(std::move(rows.features)), beta, gamma, radius,
                     has_partition ? std::optional<LogPartition>(lp) : std::nullopt, feature_norm};
  model.validate();
  return {std::move(model), std::move(emission)};
}

void write_model(const std::filesystem::path& path, const ModelFile& file) {
  write_file_bytes(path, encode_model(file));
}

ModelFile read_model(const std::filesystem::path& path) { return decode_model(read_file_bytes(path)); }

Dataset gen_gaussian_mixture(std::size_t n_clusters, std::size_t per_cluster, Eigen::Index dim, double center_scale,
                             double noise_sigma, std::uint64_t seed) {
  detail::require(n_clusters >= 1 && per_cluster >= 1 && dim >= 1, "cluster counts and dimension must be positive");
  detail::require(noise_sigma > 0.0, "noise sigma must be positive");
  detail::require(center_scale > 0.0, "center scale must be positive");
  constexpr int kMaxTries = 10000;

  Rng rng(seed);
  std::uniform_real_distribution<double> unif(-center_scale, center_scale);
  std::normal_distribution<double> normal(0.0, noise_sigma);

  std::vector<Vector> centers;
  for (std::size_t c = 0; c < n_clusters; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxTries && !placed; ++attempt) {
      Vector candidate(dim);
      for (Eigen::Index j = 0; j < dim; ++j) candidate[j] = unif(rng);
      placed = std::all_of(centers.begin(), centers.end(),
                           [&](const Vector& other) { return (other - candidate).norm() >= 4.0 * noise_sigma; });
      if (placed) centers.push_back(std::move(candidate));
    }
    if (!placed) {
      throw InvalidArgument(fmt::format("could not place cluster center {} after {} tries; centers too dense", c,
                                        kMaxTries));
    }
  }

  Dataset d;
  d.features.resize(static_cast<Eigen::Index>(n_clusters * per_cluster), dim);
  d.labels.emplace();
  d.labels->reserve(n_clusters * per_cluster);
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < n_clusters; ++c) {
    for (std::size_t k = 0; k < per_cluster; ++k, ++row) {
      for (Eigen::Index j = 0; j < dim; ++j) d.features(row, j) = centers[c][j] + normal(rng);
      d.labels->push_back(static_cast<std::uint32_t>(c));
    }
  }
  return d;
}

Dataset gen_uniform_ring(std::size_t n, Eigen::Index dim, double r_inner, double r_outer, std::uint64_t seed) {
  detail::require(dim >= 1, "dimension must be positive");
  detail::require(r_inner > 0.0 && r_inner < r_outer, "ring radii must satisfy 0 < r_inner < r_outer");
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double d = static_cast<double>(dim);
  const double lo = std::pow(r_inner, d);
  const double hi = std::pow(r_outer, d);

  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(n), dim);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    Vector dir(dim);
    double norm = 0.0;
    do {
      for (Eigen::Index j = 0; j < dim; ++j) dir[j] = normal(rng);
      norm = dir.norm();
    } while (norm == 0.0);
    // Radial CDF of a uniform annulus is proportional to r^dim.
    const double r = std::pow(lo + unif(rng) * (hi - lo), 1.0 / d);
    out.features.row(i) = (dir * (r / norm)).transpose();
  }
  return out;
}

LandscapeGrid export_landscape(const DensityModel& model, const MemoryLagrangian& mem, const LandscapeBounds& bounds,
                               std::size_t resolution) {
  if (model.n_feature() != 2) {
    throw DimensionError(fmt::format("landscape export needs a 2-D feature space, model has N_V = {}",
                                     model.n_feature()));
  }
  detail::require(resolution >= 2, "landscape resolution must be >= 2");
  detail::require(bounds.x_min < bounds.x_max && bounds.y_min < bounds.y_max, "landscape bounds are empty");

  LandscapeGrid grid;
  grid.bounds = bounds;
  grid.resolution = resolution;
  grid.rows.reserve(resolution * resolution);
  const double steps = static_cast<double>(resolution - 1);
  const double log_gamma = std::log(model.gamma);
  for (std::size_t j = 0; j < resolution; ++j) {
    const double y = bounds.y_min + (bounds.y_max - bounds.y_min) * static_cast<double>(j) / steps;
    for (std::size_t i = 0; i < resolution; ++i) {
      const double x = bounds.x_min + (bounds.x_max - bounds.x_min) * static_cast<double>(i) / steps;
      const Vector v = Vector{{x, y}};
      LandscapeRow row;
      row.x = x;
      row.y = y;
      row.energy = adiabatic_energy(model.xi, v, mem, FeatureLagrangian::HalfSquare);
      row.gate = ood_score(model, v);
      row.basin = in_basin(model, v);
      row.log_density_unnormalized = log_gamma + row.gate;
      grid.rows.push_back(row);
    }
  }
  return grid;
}

DensityModel landscape_demo_model() {
  constexpr int kPatterns = 5;
  constexpr double kNorm = 1.5;
  Matrix xi(kPatterns, 2);
  for (int mu = 0; mu < kPatterns; ++mu) {
    const double angle = std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * mu / kPatterns;
    xi(mu, 0) = kNorm * std::cos(angle);
    xi(mu, 1) = kNorm * std::sin(angle);
  }
  return DensityModel{InteractionMatrix(std::move(xi)), 3.0, 1.2 * kPatterns, 1.5 * kNorm, std::nullopt, 0.0};
}

void write_landscape_csv(std::ostream& out, const LandscapeGrid& grid) {
  out << "x,y,energy,gate,basin,log_density_unnormalized\n";
  for (const auto& r : grid.rows) {
    fmt::print(out, "{},{},{},{},{},{}\n", r.x, r.y, r.energy, r.gate, r.basin ? 1 : 0, r.log_density_unnormalized);
  }
}

}  // namespace reclag
