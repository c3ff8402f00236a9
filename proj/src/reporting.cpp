#include "encagg/reporting.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>

#include <openssl/sha.h>

#include "encagg/config.hpp"
#include "encagg/error.hpp"

#ifndef ENCAGG_VERSION
#define ENCAGG_VERSION "0.0.0"
#endif

namespace encagg {
namespace {

std::string Fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string Scientific(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string UtcNow() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string ConfigHash(const ExperimentConfig& config) {
  const std::string text = SerializeConfig(config);
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(text.data()), text.size(), digest);
  std::string hex;
  char buf[3];
  for (unsigned char byte : digest) {
    std::snprintf(buf, sizeof(buf), "%02x", byte);
    hex += buf;
  }
  return hex;
}

std::string CodeVersion() { return ENCAGG_VERSION; }

void WriteRoundsCsv(std::ostream& out, const ExperimentConfig& config, const ExperimentResult& result) {
  out << kRoundsCsvHeader << '\n';
  const char* aggregator = AggregatorKindName(config.aggregator);
  const char* attack = AttackKindName(config.attack.kind);
  for (std::size_t t = 0; t < result.records.size(); ++t) {
    const RoundRecord& r = result.records[t];
    out << r.round_index << ',' << aggregator << ',' << attack << ',' << Fixed(result.accuracy[t]) << ','
        << Fixed(r.filter_precision) << ',' << Fixed(r.filter_recall) << ',' << Scientific(r.epsilon) << ','
        << (r.fallback_used ? 1 : 0) << ',' << Scientific(r.generator_losses.l_total) << '\n';
  }
}

nlohmann::json SummaryJson(const ExperimentConfig& config, const ExperimentResult& result,
                           const RunManifest& manifest) {
  nlohmann::json j;
  j["manifest"] = {{"config_hash", manifest.config_hash},
                   {"seed", manifest.seed},
                   {"code_version", manifest.code_version},
                   {"started_at", manifest.started_at},
                   {"finished_at", manifest.finished_at},
                   {"csv", manifest.csv_path},
                   {"summary", manifest.summary_path}};
  j["config"] = SerializeConfig(config);
  j["aggregator"] = AggregatorKindName(config.aggregator);
  j["attack"] = AttackKindName(config.attack.kind);
  j["malicious_ratio"] = config.malicious_ratio;
  j["rounds"] = config.rounds;
  j["final_accuracy"] = result.final_accuracy;
  j["last_accuracy"] = result.accuracy.empty() ? 0.0 : result.accuracy.back();
  j["last_loss"] = result.loss.empty() ? 0.0 : result.loss.back();
  j["mean_precision"] = result.mean_precision;
  j["mean_recall"] = result.mean_recall;
  j["exclusion_rate"] = result.exclusion_rate;
  j["fallback_rounds"] = result.fallback_rounds;
  return j;
}

RunManifest RunAndWrite(const ExperimentConfig& config, const std::string& out_dir,
                        const std::string& name) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create output directory " + out_dir);

  RunManifest manifest;
  manifest.config_hash = ConfigHash(config);
  manifest.seed = config.seed;
  manifest.code_version = CodeVersion();
  manifest.started_at = UtcNow();
  manifest.csv_path = (fs::path(out_dir) / (name + ".csv")).string();
  manifest.summary_path = (fs::path(out_dir) / (name + ".json")).string();

  const ExperimentResult result = RunExperiment(config);
  manifest.finished_at = UtcNow();

  std::ofstream csv(manifest.csv_path, std::ios::binary);
  if (!csv) throw Error(ErrorCode::kIoError, "cannot write " + manifest.csv_path);
  WriteRoundsCsv(csv, config, result);

  std::ofstream summary(manifest.summary_path, std::ios::binary);
  if (!summary) throw Error(ErrorCode::kIoError, "cannot write " + manifest.summary_path);
  summary << SummaryJson(config, result, manifest).dump(2) << '\n';
  return manifest;
}

}  // namespace encagg
