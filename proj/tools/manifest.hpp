#pragma once

// Run manifests: the command, every flag value after env/default resolution,
// the seed, and a SHA-256 for each artifact the run wrote.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace reclag::cli {

std::string sha256_hex(std::span<const std::byte> bytes);

class Manifest {
 public:
  Manifest(std::string command, std::uint64_t seed) : command_(std::move(command)), seed_(seed) {}

  void set_flag(const std::string& name, std::string value) { flags_[name] = std::move(value); }

  /// Hashes the file now. `path` is stored relative to `root`.
  void add_artifact(const std::filesystem::path& path, const std::filesystem::path& root);

  const std::string& command() const { return command_; }
  std::string to_json() const;
  void write(const std::filesystem::path& path) const;

 private:
  struct Artifact {
    std::string path;
    std::string sha256;
    std::uintmax_t bytes = 0;
  };

  std::string command_;
  std::uint64_t seed_;
  std::map<std::string, std::string> flags_;
  std::vector<Artifact> artifacts_;
};

}  // namespace reclag::cli
