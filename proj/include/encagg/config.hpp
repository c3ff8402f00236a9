#pragma once

#include <string>

#include "encagg/simulation.hpp"

namespace encagg {

// Flat `key = value` format; `#` starts a comment. Unknown keys, malformed
// values and out-of-range settings raise kConfigError with the line number.
ExperimentConfig ParseConfigText(const std::string& text);
ExperimentConfig ParseConfigFile(const std::string& path);

// Every key in a fixed order; ParseConfigText(SerializeConfig(c)) == c.
std::string SerializeConfig(const ExperimentConfig& config);

// Sets one key on an existing config (used by sweeps). Throws kConfigError.
void SetConfigValue(ExperimentConfig& config, const std::string& key, const std::string& value);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace encagg
