#ifndef SPHEREVORTEX_MANIFEST_HPP
#define SPHEREVORTEX_MANIFEST_HPP

// Run manifests: what was run, with which parameters, and digests of every
// output file. Needs OpenSSL (libcrypto) for SHA-256.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "spherevortex/errors.hpp"

#ifndef SPHEREVORTEX_VERSION
#define SPHEREVORTEX_VERSION "0.1.0"
#endif

namespace spherevortex::io {

/// Lowercase hex SHA-256 of a file's bytes.
inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("manifest: cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw NumericalError("manifest: SHA-256 unavailable");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out.push_back(hex[md[k] >> 4]);
    out.push_back(hex[md[k] & 0xF]);
  }
  return out;
}

struct OutputFile {
  std::string path;  // relative to the manifest's directory
  std::string sha256;
};

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  std::uint64_t master_seed = 0;
  std::string version = SPHEREVORTEX_VERSION;
  double wall_time_seconds = 0.0;
  std::vector<OutputFile> outputs;
};

inline nlohmann::ordered_json to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["argv"] = m.argv;
  j["params"] = m.params;
  j["master_seed"] = m.master_seed;
  j["version"] = m.version;
  j["wall_time_seconds"] = m.wall_time_seconds;
  j["outputs"] = nlohmann::ordered_json::array();
  for (const auto& o : m.outputs) j["outputs"].push_back({{"path", o.path}, {"sha256", o.sha256}});
  return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.params = j.at("params");
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.version = j.at("version").get<std::string>();
    m.wall_time_seconds = j.at("wall_time_seconds").get<double>();
    for (const auto& o : j.at("outputs")) m.outputs.push_back({o.at("path").get<std::string>(), o.at("sha256").get<std::string>()});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("manifest: malformed (") + e.what() + ")");
  }
  return m;
}

/// Hashes `files` (relative to `dir`) into the manifest and writes dir/manifest.json.
inline void write_manifest(const std::filesystem::path& dir, RunManifest m, const std::vector<std::string>& files) {
  m.outputs.clear();
  for (const auto& f : files) m.outputs.push_back({f, sha256_file(dir / f)});
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("out-dir: cannot write manifest.json");
  out << to_json(m).dump(2) << '\n';
}

inline RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("manifest: cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("manifest: not valid JSON (") + e.what() + ")");
  }
  return manifest_from_json(j);
}

struct DigestMismatch {
  std::string path;
  std::string expected;
  std::string actual;  // empty when the file is missing
};

/// Recomputes the digest of every listed output; returns the files that differ.
inline std::vector<DigestMismatch> check_manifest(const std::filesystem::path& manifest_path) {
  const RunManifest m = read_manifest(manifest_path);
  const auto dir = manifest_path.parent_path();
  std::vector<DigestMismatch> bad;
  for (const auto& o : m.outputs) {
    const auto p = dir / o.path;
    if (!std::filesystem::exists(p)) {
      bad.push_back({o.path, o.sha256, ""});
      continue;
    }
    const std::string h = sha256_file(p);
    if (h != o.sha256) bad.push_back({o.path, o.sha256, h});
  }
  return bad;
}

}  // namespace spherevortex::io

#endif
