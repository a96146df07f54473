#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace nfr {

// Digest of a file's bytes, formatted as "fnv1a64:<hex>".
std::string file_digest(const std::string& path);

// Record of one CLI run: command, resolved configuration with every default
// materialized, input digests, toolkit version, and the RNG seed.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> inputs;  // path -> digest
  std::map<std::string, std::string> config;
  std::string version;
  std::uint64_t seed = 0;
};

void write_manifest(const RunManifest& manifest, const std::string& path);

}  // namespace nfr
