#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "encagg/clustering.hpp"
#include "encagg/filtering.hpp"
#include "encagg/generator.hpp"
#include "encagg/types.hpp"

namespace encagg {

struct EnCAggConfig {
  std::size_t min_samples = kDefaultMinSamples;
  double r = kDefaultRadiusCoefficient;
  double gamma = kDefaultDensityConstraint;
  std::size_t n_gen = kDefaultPseudoGradientCount;
  bool enable_generator = true;

  std::size_t noise_dim = 16;
  std::size_t hidden_dim = 32;
  double alpha = 1.0;
  double beta = 1.0;
  double w1 = 2.0;
  double w0 = 1.0;
  double tau_factor = 0.25;  // tau = tau_factor * epsilon
  double rho = 0.5;
  double generator_lr = 1e-3;

  // Throws kConfigError.
  void Validate() const;
  GeneratorHyper Hyper(double epsilon) const;
};

struct RoundRecord {
  std::size_t round_index = 0;
  IndexSet retained_round1;
  IndexSet final_benign;
  IndexSet discarded;
  int benign_label_r1 = kNoise;
  int benign_label_r2 = kNoise;
  double epsilon = 0.0;
  bool fallback_used = false;
  std::string fallback_reason;
  std::size_t pseudo_in_benign = 0;
  GeneratorLossReport generator_losses;
  double filter_precision = 1.0;
  double filter_recall = 1.0;
  bool precision_defined = true;
  double aggregated_norm = 0.0;
};

// What a pseudo-gradient source sees before round-two clustering.
struct RoundTwoView {
  const Points2& real_points;    // re-projected round-two real gradients
  const IndexSet& real_clients;  // client index of each real point
  double epsilon;
  Point2 benign_center;
};

// Replaces the generator for one round (used to force specific pseudo-gradients).
using PseudoGradientOverride = std::function<Points2(const RoundTwoView&)>;

struct RoundOutput {
  Vector aggregated;
  RoundRecord record;
  GeneratorModel generator;
};

// One full aggregation round: project, pick the radius from the known benign
// clients, cluster, filter, re-project the survivors, add pseudo-gradients,
// re-cluster, keep the real members of the benign cluster, average them and
// train the generator on where its samples landed. Failures inside the
// clustering stages fall back to the known-benign mean.
RoundOutput RunRound(const GradientMatrix& grads, const IndexSet& known_benign,
                     const EnCAggConfig& config, const GeneratorModel& generator,
                     std::uint64_t rng_seed, const PseudoGradientOverride* override_source = nullptr);

// Unweighted mean of the selected rows. Throws kEmptySelection.
Vector AggregateMean(const IndexSet& selected, const GradientMatrix& grads);

// weights - eta * aggregated.
Vector ApplyGlobalUpdate(const Vector& weights, const Vector& aggregated, double eta);

}  // namespace encagg
