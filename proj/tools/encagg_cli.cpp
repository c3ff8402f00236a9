// encagg: run, sweep and verify robust-aggregation experiments.

#include <cstdlib>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "encagg/config.hpp"
#include "encagg/error.hpp"
#include "encagg/reporting.hpp"
#include "verify.hpp"

namespace {

encagg::ExperimentConfig LoadConfig(const std::string& path) {
  encagg::ExperimentConfig config = encagg::ParseConfigFile(path);
  if (const char* seed = std::getenv("ENCAGG_SEED"); seed != nullptr && *seed != '\0') {
    encagg::SetConfigValue(config, "seed", seed);
  }
  return config;
}

std::vector<std::string> SplitList(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

encagg::verify::Hooks MakeHooks() {
  encagg::verify::Hooks hooks;
#ifdef ENCAGG_FAULTY_DBSCAN
  // Test build only: demote the last core point to noise.
  hooks.dbscan = [](const encagg::Points2& points, double eps, std::size_t min_samples) {
    encagg::ClusteringResult r = encagg::Dbscan(points, eps, min_samples);
    for (std::size_t i = r.labels.size(); i-- > 0;) {
      if (r.core[i]) {
        r.labels[i] = encagg::kNoise;
        break;
      }
    }
    return r;
  };
#endif
  return hooks;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-round density-clustering robust aggregation for federated learning"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string name = "run";
  auto* run = app.add_subcommand("run", "Run one experiment");
  run->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--name", name, "Output file stem");

  std::string param;
  std::string values;
  std::size_t jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Run one experiment per value of a parameter");
  sweep->add_option("--config", config_path, "Base experiment config file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--param", param, "Config key to vary")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--out", out_dir, "Output directory");
  sweep->add_option("--jobs", jobs, "Parallel experiments")->check(CLI::PositiveNumber);

  app.add_subcommand("verify", "Run the oracle and invariant checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto manifest = encagg::RunAndWrite(LoadConfig(config_path), out_dir, name);
      std::cout << manifest.csv_path << '\n' << manifest.summary_path << '\n';
      return 0;
    }
    if (sweep->parsed()) {
      const encagg::ExperimentConfig base = LoadConfig(config_path);
      std::vector<encagg::ExperimentConfig> configs;
      for (const auto& v : SplitList(values)) {
        encagg::ExperimentConfig c = base;
        encagg::SetConfigValue(c, param, v);
        c.Validate();
        configs.push_back(c);
      }
      if (configs.empty()) throw encagg::Error(encagg::ErrorCode::kConfigError, "--values is empty");
      const auto list = SplitList(values);
      for (std::size_t start = 0; start < configs.size(); start += jobs) {
        std::vector<std::future<encagg::RunManifest>> batch;
        for (std::size_t i = start; i < std::min(configs.size(), start + jobs); ++i) {
          batch.push_back(std::async(std::launch::async, [&, i] {
            return encagg::RunAndWrite(configs[i], out_dir, param + "_" + list[i]);
          }));
        }
        for (auto& f : batch) std::cout << f.get().summary_path << '\n';
      }
      return 0;
    }
    const bool ok = encagg::verify::RunVerification(MakeHooks(), std::cout);
    return ok ? 0 : 1;
  } catch (const encagg::Error& e) {
    std::cerr << "encagg: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "encagg: " << e.what() << '\n';
    return 2;
  }
}
