#pragma once

#include <ostream>
#include <string>

#include "json.hpp"

#include "encagg/simulation.hpp"

namespace encagg {

inline constexpr const char* kRoundsCsvHeader =
    "round,aggregator,attack,accuracy,precision,recall,epsilon,fallback,l_total";

struct RunManifest {
  std::string config_hash;  // SHA-256 of the canonical config text
  std::uint64_t seed = 0;
  std::string code_version;
  std::string started_at;   // UTC, ISO-8601
  std::string finished_at;
  std::string csv_path;
  std::string summary_path;
};

std::string ConfigHash(const ExperimentConfig& config);
std::string CodeVersion();

void WriteRoundsCsv(std::ostream& out, const ExperimentConfig& config, const ExperimentResult& result);
nlohmann::json SummaryJson(const ExperimentConfig& config, const ExperimentResult& result,
                           const RunManifest& manifest);

// Runs one experiment and writes <out_dir>/<name>.csv and <out_dir>/<name>.json.
RunManifest RunAndWrite(const ExperimentConfig& config, const std::string& out_dir,
                        const std::string& name);

}  // namespace encagg
