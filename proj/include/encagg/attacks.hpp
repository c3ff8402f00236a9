#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "encagg/types.hpp"

namespace encagg {

enum class AttackKind { kNone, kGaussian, kSignFlip, kScale, kLie, kMinMax, kAdaptiveSubspace };

const char* AttackKindName(AttackKind kind);
std::optional<AttackKind> ParseAttackKind(const std::string& name);

struct AttackSpec {
  AttackKind kind = AttackKind::kNone;
  double scale = 4.0;             // sign_flip / scale
  double std = 1.0;               // gaussian
  double z = 1.5;                 // lie
  std::size_t search_iters = 40;  // min_max and adaptive bisection steps
  double inplane_fraction = 0.5;  // adaptive: in-plane shift as a fraction of epsilon
  double ortho_multiplier = 10.0; // adaptive: orthogonal search ceiling, times mean benign norm
  bool collusion = true;

  void Validate() const;  // throws kConfigError
};

Vector AttackSignFlip(const Vector& benign, double scale);
Vector AttackScale(const Vector& benign, double scale);
Vector AttackGaussian(std::size_t dim, double std, std::mt19937_64& rng);

// Coordinate-wise mean minus z times the population standard deviation.
Vector AttackLie(const Matrix& benign_set, double z);

// mean + gamma * direction with the largest gamma whose farthest benign
// gradient is no farther than the largest benign pairwise distance.
Vector AttackMinMax(const Matrix& benign_set, const Vector& direction, std::size_t search_iters);

struct AdaptiveCrafted {
  Vector gradient;
  Vector in_plane;    // delta parallel
  Vector orthogonal;  // delta perpendicular
};

// g_ref + in-plane shift of length inplane_mag + orthogonal-complement shift of
// length ortho_mag, both in random directions.
AdaptiveCrafted AttackAdaptiveSubspace(const Vector& benign_ref, const Matrix& basis,
                                       double epsilon_est, double inplane_mag, double ortho_mag,
                                       std::mt19937_64& rng);

// Everything a poisoning client is allowed to see in one round.
struct AttackContext {
  const GradientMatrix& honest;      // every client's honest gradient this round
  const IndexSet& known_benign;      // known to the adaptive attacker
  const IndexSet& poisoners;         // clients poisoning this round
  std::size_t min_samples;
  double r;
  double gamma;
};

// Crafted gradient for each poisoner (same order as context.poisoners).
std::vector<Vector> CraftPoisonedGradients(const AttackSpec& spec, const AttackContext& context,
                                           std::mt19937_64& rng);

// Attacker-side replica of the first clustering round: true when every row in
// `candidates` lands in the filtered benign cluster.
bool SimulateRoundOneAcceptance(const GradientMatrix& grads, const IndexSet& known_benign,
                                const IndexSet& candidates, std::size_t min_samples, double r,
                                double gamma);

struct PoisonSchedule {
  double malicious_ratio = 0.0;
  IndexSet malicious_ids;
  // flags[round][m] is true when malicious_ids[m] poisons in that round.
  std::vector<std::vector<bool>> per_round_flags;

  IndexSet PoisonersAt(std::size_t round) const;
};

// Independent per-round coin flips (probability poison_probability) for each
// malicious client, redrawn until at most floor(ratio * n) clients poison.
PoisonSchedule SchedulePoisoning(std::size_t n_clients, const IndexSet& malicious_ids,
                                 double malicious_ratio, std::size_t rounds,
                                 double poison_probability, std::mt19937_64& rng);

}  // namespace encagg
