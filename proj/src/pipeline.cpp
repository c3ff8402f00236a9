#include "encagg/pipeline.hpp"

#include <cmath>
#include <random>

#include "encagg/error.hpp"
#include "encagg/projection.hpp"

namespace encagg {
namespace {

void Require(bool ok, const char* message) {
  if (!ok) throw Error(ErrorCode::kConfigError, message);
}

// Projected points, or all-zero points when every gradient is identical.
Points2 ProjectOrCollapse(const GradientMatrix& grads) {
  try {
    return ProjectGradients(grads).ProjectedPoints();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateCovariance) throw;
    return Points2(grads.rows(), Point2::Zero());
  }
}

Point2 MeanOf(const Points2& points, const IndexSet& positions) {
  Point2 sum = Point2::Zero();
  for (std::size_t i : positions) sum += points[i];
  return sum / static_cast<double>(positions.size());
}

std::size_t PositionOf(const IndexSet& set, std::size_t value) {
  return static_cast<std::size_t>(std::lower_bound(set.begin(), set.end(), value) - set.begin());
}

struct RoundTwoResult {
  IndexSet final_benign;  // client indices
  int benign_label = kNoise;
  bool fallback = false;
  std::string reason;
  std::size_t pseudo_in_benign = 0;
  std::vector<int> pseudo_labels;
  Matrix noise;
  Point2 benign_center = Point2::Zero();
  bool trainable = false;
};

}  // namespace

void EnCAggConfig::Validate() const {
  Require(min_samples >= 1, "min_samples must be >= 1");
  Require(r > 0.0 && r < 1.0, "r must be in (0,1)");
  Require(gamma > 0.0, "gamma must be > 0");
  Require(noise_dim >= 1, "generator.noise_dim must be >= 1");
  Require(hidden_dim >= 2, "generator.hidden_dim must be >= 2");
  Require(w1 > w0 && w0 > 0.0, "generator weights need w1 > w0 > 0");
  Require(tau_factor > 0.0, "generator.tau_factor must be > 0");
  Require(rho > 0.0, "generator.rho must be > 0");
  Require(generator_lr > 0.0, "generator.lr must be > 0");
  Require(alpha >= 0.0 && beta >= 0.0, "generator.alpha and generator.beta must be >= 0");
}

GeneratorHyper EnCAggConfig::Hyper(double epsilon) const {
  GeneratorHyper h;
  h.alpha = alpha;
  h.beta = beta;
  h.w1 = w1;
  h.w0 = w0;
  h.tau = tau_factor * epsilon;
  h.rho = rho;
  h.lr = generator_lr;
  return h;
}

Vector AggregateMean(const IndexSet& selected, const GradientMatrix& grads) {
  if (selected.empty()) throw Error(ErrorCode::kEmptySelection, "no gradients selected for aggregation");
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(grads.cols()));
  for (std::size_t i : selected) {
    if (i >= grads.rows()) throw Error(ErrorCode::kInvalidInput, "selected index out of range");
    sum += grads.data().row(static_cast<Eigen::Index>(i)).transpose();
  }
  return sum / static_cast<double>(selected.size());
}

Vector ApplyGlobalUpdate(const Vector& weights, const Vector& aggregated, double eta) {
  if (!(eta > 0.0)) throw Error(ErrorCode::kInvalidInput, "learning rate must be positive");
  if (weights.size() != aggregated.size()) throw Error(ErrorCode::kInvalidInput, "weights and update differ in length");
  return weights - eta * aggregated;
}

RoundOutput RunRound(const GradientMatrix& grads, const IndexSet& known_benign_in,
                     const EnCAggConfig& config, const GeneratorModel& generator,
                     std::uint64_t rng_seed, const PseudoGradientOverride* override_source) {
  config.Validate();
  const IndexSet known_benign = MakeIndexSet(known_benign_in);
  const std::size_t n = grads.rows();
  if (known_benign.size() < 2 || known_benign.size() > n || known_benign.back() >= n) {
    throw Error(ErrorCode::kInvalidInput, "need 2 <= |known benign| <= n with valid indices");
  }

  std::mt19937_64 rng(rng_seed);
  RoundOutput out;
  out.generator = generator;
  RoundRecord& rec = out.record;

  RoundTwoResult two;
  try {
    // Round one.
    const Points2 points = ProjectOrCollapse(grads);
    Points2 known_points;
    for (std::size_t k : known_benign) known_points.push_back(points[k]);
    const RadiusSelection radius = SelectRadius(known_points, config.r);
    const double epsilon = radius.epsilon;
    rec.epsilon = epsilon;
    const std::pair<std::size_t, std::size_t> roots{known_benign[radius.root_pair.first],
                                                    known_benign[radius.root_pair.second]};

    const ClusteringResult first = Dbscan(points, epsilon, config.min_samples);
    const FilterOutcome filtered =
        FilterRoundOne(first, points, known_benign, roots, config.gamma, epsilon);
    rec.retained_round1 = filtered.retained;
    rec.benign_label_r1 = filtered.benign_label;

    // Round two runs over the survivors plus the known benign clients, so the
    // roots and density references always exist in the new projection.
    const IndexSet real = SetUnion(filtered.retained, known_benign);
    if (real.size() < config.min_samples) {
      two.fallback = true;
      two.reason = "too few gradients survived round one";
    } else {
      const Points2 real_points = ProjectOrCollapse(grads.Select(real));
      IndexSet known_pos;
      for (std::size_t k : known_benign) known_pos.push_back(PositionOf(real, k));
      IndexSet core_pos;
      for (std::size_t i : filtered.benign_core) core_pos.push_back(PositionOf(real, i));
      two.benign_center = core_pos.empty() ? MeanOf(real_points, known_pos) : MeanOf(real_points, core_pos);

      Points2 pseudo;
      if (override_source != nullptr) {
        pseudo = (*override_source)(RoundTwoView{real_points, real, epsilon, two.benign_center});
      } else if (config.enable_generator && config.n_gen > 0) {
        AnchorGenerator(out.generator, two.benign_center, epsilon, config.gamma);
        two.noise = SampleNoise(config.n_gen, out.generator.noise_dim, rng);
        pseudo = Generate(out.generator, two.noise).points;
        two.trainable = true;
      }

      Points2 combined = real_points;
      combined.insert(combined.end(), pseudo.begin(), pseudo.end());
      const ClusteringResult second = Dbscan(combined, epsilon, config.min_samples);
      const std::pair<std::size_t, std::size_t> root_pos{PositionOf(real, roots.first),
                                                         PositionOf(real, roots.second)};
      const BenignClusterChoice choice = IdentifyBenignCluster(second, root_pos, combined);
      two.benign_label = choice.label;

      two.pseudo_labels.assign(pseudo.size(), 0);
      for (std::size_t j = 0; j < pseudo.size(); ++j) {
        const int label = second.labels[real.size() + j];
        if (!choice.fallback && label == choice.label) {
          two.pseudo_labels[j] = 1;
          ++two.pseudo_in_benign;
        }
      }

      if (choice.fallback) {
        two.fallback = true;
        two.reason = "roots are noise and at most one cluster formed in round two";
      } else {
        IndexSet members;
        for (std::size_t p = 0; p < real.size(); ++p) {
          if (second.labels[p] == choice.label) members.push_back(p);
        }
        const IndexSet kept = ApplyDensityConstraint(members, combined, known_pos, config.gamma, epsilon);
        for (std::size_t p : kept) two.final_benign.push_back(real[p]);
        if (two.final_benign.empty()) {
          two.fallback = true;
          two.reason = "benign cluster holds no real gradients";
        }
      }
    }
  } catch (const Error& e) {
    two.fallback = true;
    two.trainable = false;
    two.reason = e.what();
  }

  rec.benign_label_r2 = two.benign_label;
  rec.pseudo_in_benign = two.pseudo_in_benign;
  rec.fallback_used = two.fallback;
  rec.fallback_reason = two.reason;
  rec.final_benign = two.fallback ? known_benign : MakeIndexSet(two.final_benign);

  out.aggregated = AggregateMean(rec.final_benign, grads);
  rec.aggregated_norm = out.aggregated.norm();
  IndexSet everyone(n);
  for (std::size_t i = 0; i < n; ++i) everyone[i] = i;
  rec.discarded = SetDifference(everyone, rec.final_benign);

  if (two.trainable) {
    try {
      auto [next, report] = TrainStep(out.generator, two.noise, two.pseudo_labels,
                                      two.benign_center, rec.epsilon, config.Hyper(rec.epsilon));
      out.generator = std::move(next);
      rec.generator_losses = std::move(report);
    } catch (const Error&) {
      // Non-finite loss: keep the previous generator for the next round.
    }
  }
  return out;
}

}  // namespace encagg
