#pragma once

#include <map>
#include <string>

#include "nfr/registration.hpp"

namespace nfr {

// Flat "key = value" configuration files; '#' starts a comment.
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Applies known keys onto a config; unknown keys raise ParseError.
void apply_config_entries(const std::map<std::string, std::string>& entries,
                          RegistrationConfig& config);

// Every knob with its current value, for the run manifest.
std::map<std::string, std::string> materialize_config(const RegistrationConfig& config);

const char* stage1_features_name(Stage1Features provider);
Stage1Features stage1_features_from_name(const std::string& name);

}  // namespace nfr
