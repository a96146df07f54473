#include "nfr/manifest.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "nfr/errors.hpp"
#include "nfr/mesh.hpp"

namespace nfr {

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::uint64_t h = fnv1a64(bytes.data(), bytes.size());
  std::ostringstream out;
  out << "fnv1a64:" << std::hex << h;
  return out.str();
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
  nlohmann::json j;
  j["command"] = manifest.command;
  j["version"] = manifest.version;
  j["seed"] = manifest.seed;
  j["inputs"] = manifest.inputs;
  j["config"] = manifest.config;
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace nfr
