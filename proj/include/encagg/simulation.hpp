#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "encagg/attacks.hpp"
#include "encagg/baselines.hpp"
#include "encagg/pipeline.hpp"
#include "encagg/types.hpp"

namespace encagg {

enum class TaskKind { kLinearRegression, kLogisticClassification };

const char* TaskKindName(TaskKind kind);
std::optional<TaskKind> ParseTaskKind(const std::string& name);

struct TaskSpec {
  TaskKind kind = TaskKind::kLogisticClassification;
  std::size_t dim = 64;
  double noise_std = 0.5;
  double heterogeneity = 1.0;     // length of each client's input-mean shift
  double weight_norm = 3.0;       // norm of the true weight vector
  std::size_t samples_per_client = 250;  // 20% of these go to the held-out set
  std::size_t root_samples = 100;        // FLTrust server shard
};

struct ExperimentConfig {
  std::size_t n = 20;
  std::size_t k = 4;
  double malicious_ratio = 0.0;
  std::size_t rounds = 300;
  double learning_rate = 0.5;
  std::size_t batch_size = 16;
  double poison_probability = 1.0;  // below 1: malicious clients poison on a coin flip
  AggregatorKind aggregator = AggregatorKind::kEnCAgg;
  double trim_fraction = 0.2;
  int krum_f = -1;  // -1: number of malicious clients
  EnCAggConfig encagg;
  AttackSpec attack;
  TaskSpec task;
  std::uint64_t seed = 1;

  // Throws kConfigError naming the offending field.
  void Validate() const;
  std::size_t MaliciousCount() const;
};

struct SyntheticTask {
  TaskKind kind = TaskKind::kLogisticClassification;
  std::size_t d = 0;
  Vector true_weights;
  double noise_std = 0.0;
  double heterogeneity = 0.0;
};

enum class ClientRole { kBenign, kKnownBenign, kMalicious };

struct Shard {
  Matrix x;  // samples x d
  Vector y;
};

struct ClientState {
  std::size_t id = 0;
  ClientRole role = ClientRole::kBenign;
  Shard shard;
  Vector input_shift;
};

struct Federation {
  SyntheticTask task;
  std::vector<ClientState> clients;
  IndexSet known_benign;
  IndexSet malicious;
  Shard holdout;
  Shard root;  // server-side shard for FLTrust
};

Federation MakeFederation(const ExperimentConfig& config);

// Mean task loss over the rows: logistic cross-entropy or 0.5 * squared error.
double TaskLoss(TaskKind kind, const Matrix& x, const Vector& y, const Vector& weights);
Vector TaskGradient(TaskKind kind, const Matrix& x, const Vector& y, const Vector& weights);
// Classification accuracy, or R^2 clipped to [0, 1] for regression.
double TaskAccuracy(TaskKind kind, const Matrix& x, const Vector& y, const Vector& weights);

// Exact gradient on a mini-batch drawn without replacement from the shard.
Vector LocalGradient(const ClientState& client, TaskKind kind, const Vector& weights,
                     std::size_t batch_size, std::mt19937_64& rng);

struct FilterMetrics {
  double precision = 1.0;
  double recall = 1.0;
  bool precision_defined = true;
};

FilterMetrics ComputeFilterMetrics(const IndexSet& final_benign, const IndexSet& poisoners,
                                   std::size_t n_clients);

struct ExperimentResult {
  std::vector<RoundRecord> records;
  std::vector<double> accuracy;
  std::vector<double> loss;
  std::vector<IndexSet> poisoners;
  double final_accuracy = 0.0;   // mean over the last min(10, rounds) rounds
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double exclusion_rate = 0.0;   // rounds whose final set holds no poisoner
  std::size_t fallback_rounds = 0;
  Vector final_weights;
};

ExperimentResult RunExperiment(const ExperimentConfig& config);

// Seed derived deterministically from the experiment seed and a path of ids.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace encagg
