#include "nfr/config.hpp"

#include <fstream>
#include <sstream>

#include "nfr/errors.hpp"

namespace nfr {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::ParseError, "config key '" + key + "' expects a number, got '" + value + "'");
  }
}

int to_int(const std::string& key, const std::string& value) {
  const double v = to_double(key, value);
  if (v != static_cast<int>(v))
    fail(ErrorCode::ParseError, "config key '" + key + "' expects an integer");
  return static_cast<int>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  fail(ErrorCode::ParseError, "config key '" + key + "' expects true/false");
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::map<std::string, std::string> entries;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(trimmed.substr(0, eq));
    const std::string value = trim(trimmed.substr(eq + 1));
    if (key.empty() || value.empty())
      fail(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": empty key or value");
    entries[key] = value;
  }
  return entries;
}

void apply_config_entries(const std::map<std::string, std::string>& entries,
                          RegistrationConfig& config) {
  for (const auto& [key, value] : entries) {
    if (key == "lambda_corr_stage1") config.stage1.corr = to_double(key, value);
    else if (key == "lambda_cd_stage1") config.stage1.cd = to_double(key, value);
    else if (key == "lambda_arap_stage1") config.stage1.arap = to_double(key, value);
    else if (key == "lambda_corr_stage2") config.stage2.corr = to_double(key, value);
    else if (key == "lambda_cd_stage2") config.stage2.cd = to_double(key, value);
    else if (key == "lambda_arap_stage2") config.stage2.arap = to_double(key, value);
    else if (key == "refresh_period") config.refresh_period = to_int(key, value);
    else if (key == "bijectivity_tau") config.bijectivity_tau = to_double(key, value);
    else if (key == "max_iterations") config.max_iterations = to_int(key, value);
    else if (key == "convergence_tol") config.convergence_tol = to_double(key, value);
    else if (key == "partial") config.partial = to_bool(key, value);
    else if (key == "stage1_features") config.stage1_features = stage1_features_from_name(value);
    else if (key == "arap_beta") config.arap_beta = to_double(key, value);
    else if (key == "target_graph_nodes") config.target_graph_nodes = to_int(key, value);
    else if (key == "spectral_k") config.spectral_k = to_int(key, value);
    else if (key == "descriptor_scales") config.descriptor_scales = to_int(key, value);
    else if (key == "initial_step_fraction") config.initial_step_fraction = to_double(key, value);
    else if (key == "max_step_fraction") config.max_step_fraction = to_double(key, value);
    else if (key == "max_backtracks") config.max_backtracks = to_int(key, value);
    else if (key == "seed") config.seed = static_cast<std::uint64_t>(to_double(key, value));
    else fail(ErrorCode::ParseError, "unknown config key '" + key + "'");
  }
  if (config.refresh_period < 1) fail(ErrorCode::ParseError, "refresh_period must be >= 1");
  if (config.bijectivity_tau <= 0.0) fail(ErrorCode::ParseError, "bijectivity_tau must be > 0");
  if (config.stage1.corr < 0 || config.stage1.cd < 0 || config.stage1.arap < 0 ||
      config.stage2.corr < 0 || config.stage2.cd < 0 || config.stage2.arap < 0)
    fail(ErrorCode::ParseError, "energy weights must be nonnegative");
}

std::map<std::string, std::string> materialize_config(const RegistrationConfig& config) {
  std::map<std::string, std::string> out;
  out["lambda_corr_stage1"] = format_double(config.stage1.corr);
  out["lambda_cd_stage1"] = format_double(config.stage1.cd);
  out["lambda_arap_stage1"] = format_double(config.stage1.arap);
  out["lambda_corr_stage2"] = format_double(config.stage2.corr);
  out["lambda_cd_stage2"] = format_double(config.stage2.cd);
  out["lambda_arap_stage2"] = format_double(config.stage2.arap);
  out["refresh_period"] = std::to_string(config.refresh_period);
  out["bijectivity_tau"] = format_double(config.bijectivity_tau);
  out["max_iterations"] = std::to_string(config.max_iterations);
  out["convergence_tol"] = format_double(config.convergence_tol);
  out["partial"] = config.partial ? "true" : "false";
  out["stage1_features"] = stage1_features_name(config.stage1_features);
  out["arap_beta"] = format_double(config.arap_beta);
  out["target_graph_nodes"] = std::to_string(config.target_graph_nodes);
  out["spectral_k"] = std::to_string(config.spectral_k);
  out["descriptor_scales"] = std::to_string(config.descriptor_scales);
  out["initial_step_fraction"] = format_double(config.initial_step_fraction);
  out["max_step_fraction"] = format_double(config.max_step_fraction);
  out["max_backtracks"] = std::to_string(config.max_backtracks);
  out["seed"] = std::to_string(config.seed);
  return out;
}

const char* stage1_features_name(Stage1Features provider) {
  switch (provider) {
    case Stage1Features::Coordinates: return "coordinates";
    case Stage1Features::Spectral: return "spectral";
    case Stage1Features::External: return "file";
  }
  return "coordinates";
}

Stage1Features stage1_features_from_name(const std::string& name) {
  if (name == "coordinates") return Stage1Features::Coordinates;
  if (name == "spectral") return Stage1Features::Spectral;
  if (name == "file") return Stage1Features::External;
  fail(ErrorCode::ParseError, "unknown feature provider '" + name + "'");
}

}  // namespace nfr
