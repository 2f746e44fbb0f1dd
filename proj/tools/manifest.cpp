#include "manifest.hpp"

#include <openssl/evp.h>

#include <fstream>

#include "json.hpp"
#include "reclag/error.hpp"
#include "reclag/io_data.hpp"

namespace reclag::cli {

std::string sha256_hex(std::span<const std::byte> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

void Manifest::add_artifact(const std::filesystem::path& path, const std::filesystem::path& root) {
  const auto bytes = read_file_bytes(path);
  artifacts_.push_back({path.lexically_relative(root).generic_string(), sha256_hex(bytes), bytes.size()});
}

std::string Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["seed"] = seed_;
  j["flags"] = nlohmann::ordered_json::object();
  for (const auto& [name, value] : flags_) j["flags"][name] = value;
  j["artifacts"] = nlohmann::ordered_json::array();
  for (const auto& a : artifacts_) j["artifacts"].push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  return j.dump(2) + "\n";
}

void Manifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write manifest " + path.string());
  out << to_json();
}

}  // namespace reclag::cli
