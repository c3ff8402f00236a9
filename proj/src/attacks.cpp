#include "encagg/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "encagg/clustering.hpp"
#include "encagg/error.hpp"
#include "encagg/filtering.hpp"
#include "encagg/projection.hpp"

namespace encagg {
namespace {

constexpr double kCollusionJitter = 1e-3;  // times the attacker's epsilon estimate

Vector RandomUnit(Eigen::Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  do {
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = normal(rng);
  } while (v.norm() == 0.0);
  return v.normalized();
}

double MaxPairwiseDistance(const Matrix& rows) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < rows.rows(); ++j) {
      best = std::max(best, (rows.row(i) - rows.row(j)).norm());
    }
  }
  return best;
}

double MaxDistanceTo(const Matrix& rows, const Vector& point) {
  return (rows.rowwise() - point.transpose()).rowwise().norm().maxCoeff();
}

struct AttackerView {
  ProjectionResult projection;
  double epsilon = 0.0;
  bool degenerate = false;
};

AttackerView EstimateView(const GradientMatrix& honest, const IndexSet& known, double r) {
  AttackerView view;
  try {
    view.projection = ProjectGradients(honest);
    Points2 known_points;
    for (std::size_t k : known) known_points.emplace_back(view.projection.projected.row(static_cast<Eigen::Index>(k)).transpose());
    view.epsilon = SelectRadius(known_points, r).epsilon;
  } catch (const Error&) {
    view.degenerate = true;
  }
  return view;
}

std::vector<Vector> Replicate(const Vector& crafted, std::size_t count, double jitter,
                              std::mt19937_64& rng) {
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vector g = crafted;
    if (jitter > 0.0) g += jitter * RandomUnit(crafted.size(), rng);
    out.push_back(std::move(g));
  }
  return out;
}

GradientMatrix WithRows(const GradientMatrix& base, const IndexSet& rows, const std::vector<Vector>& values) {
  Matrix data = base.data();
  for (std::size_t i = 0; i < rows.size(); ++i) data.row(static_cast<Eigen::Index>(rows[i])) = values[i].transpose();
  return GradientMatrix(std::move(data), base.client_ids());
}

std::vector<Vector> CraftAdaptive(const AttackSpec& spec, const AttackContext& ctx,
                                  std::mt19937_64& rng) {
  const GradientMatrix& honest = ctx.honest;
  const AttackerView view = EstimateView(honest, ctx.known_benign, ctx.r);
  if (view.degenerate) return Replicate(honest.data().colwise().mean().transpose(), ctx.poisoners.size(), 0.0, rng);

  // Reference: the honest gradient nearest the projected benign mean (origin
  // after centring).
  Eigen::Index ref = 0;
  view.projection.projected.rowwise().norm().minCoeff(&ref);
  const Vector g_ref = honest.data().row(ref).transpose();

  const double inplane = std::min(spec.inplane_fraction, 1.0) * view.epsilon;
  const double ceiling = spec.ortho_multiplier * honest.data().rowwise().norm().mean();
  const double jitter = spec.collusion ? kCollusionJitter * view.epsilon : 0.0;

  // Fix the random directions once; only the orthogonal magnitude is searched.
  std::mt19937_64 direction_rng(rng());
  auto craft = [&](double ortho) {
    std::mt19937_64 local = direction_rng;
    return AttackAdaptiveSubspace(g_ref, view.projection.basis, view.epsilon, inplane, ortho, local).gradient;
  };
  const std::uint64_t jitter_seed = rng();
  auto accepted = [&](double ortho) {
    std::mt19937_64 jitter_rng(jitter_seed);
    const auto rows = Replicate(craft(ortho), ctx.poisoners.size(), jitter, jitter_rng);
    return SimulateRoundOneAcceptance(WithRows(honest, ctx.poisoners, rows), ctx.known_benign,
                                      ctx.poisoners, ctx.min_samples, ctx.r, ctx.gamma);
  };

  double chosen = 0.0;
  if (accepted(ceiling)) {
    chosen = ceiling;
  } else {
    double lo = 0.0;
    double hi = ceiling;
    for (std::size_t it = 0; it < spec.search_iters; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (accepted(mid)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    chosen = lo;
  }
  std::mt19937_64 jitter_rng(jitter_seed);
  return Replicate(craft(chosen), ctx.poisoners.size(), jitter, jitter_rng);
}

}  // namespace

const char* AttackKindName(AttackKind kind) {
  switch (kind) {
    case AttackKind::kNone: return "none";
    case AttackKind::kGaussian: return "gaussian";
    case AttackKind::kSignFlip: return "sign_flip";
    case AttackKind::kScale: return "scale";
    case AttackKind::kLie: return "lie";
    case AttackKind::kMinMax: return "min_max";
    case AttackKind::kAdaptiveSubspace: return "adaptive_subspace";
  }
  return "none";
}

std::optional<AttackKind> ParseAttackKind(const std::string& name) {
  for (AttackKind k : {AttackKind::kNone, AttackKind::kGaussian, AttackKind::kSignFlip,
                       AttackKind::kScale, AttackKind::kLie, AttackKind::kMinMax,
                       AttackKind::kAdaptiveSubspace}) {
    if (name == AttackKindName(k)) return k;
  }
  return std::nullopt;
}

void AttackSpec::Validate() const {
  auto require = [](bool ok, const char* message) {
    if (!ok) throw Error(ErrorCode::kConfigError, message);
  };
  require(std::isfinite(scale) && scale > 0.0, "attack.scale must be finite and > 0");
  require(std::isfinite(std) && std >= 0.0, "attack.std must be finite and >= 0");
  require(std::isfinite(z) && z > 0.0, "attack.z must be finite and > 0");
  require(search_iters >= 1, "attack.search_iters must be >= 1");
  require(std::isfinite(inplane_fraction) && inplane_fraction >= 0.0 && inplane_fraction <= 1.0,
          "attack.inplane_fraction must be in [0,1]");
  require(std::isfinite(ortho_multiplier) && ortho_multiplier >= 0.0,
          "attack.ortho_multiplier must be finite and >= 0");
}

Vector AttackSignFlip(const Vector& benign, double scale) {
  if (!(scale > 0.0)) throw Error(ErrorCode::kInvalidInput, "sign-flip scale must be positive");
  return -scale * benign;
}

Vector AttackScale(const Vector& benign, double scale) {
  if (!(scale > 0.0)) throw Error(ErrorCode::kInvalidInput, "scale must be positive");
  return scale * benign;
}

Vector AttackGaussian(std::size_t dim, double std, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = std * normal(rng);
  return v;
}

Vector AttackLie(const Matrix& benign_set, double z) {
  if (benign_set.rows() < 2) throw Error(ErrorCode::kInvalidInput, "LIE needs at least two benign gradients");
  if (!(z > 0.0)) throw Error(ErrorCode::kInvalidInput, "LIE z must be positive");
  const Vector mean = benign_set.colwise().mean().transpose();
  const Matrix centered = benign_set.rowwise() - mean.transpose();
  const Vector std = (centered.array().square().colwise().sum() / static_cast<double>(benign_set.rows()))
                         .sqrt()
                         .transpose();
  return mean - z * std;
}

Vector AttackMinMax(const Matrix& benign_set, const Vector& direction, std::size_t search_iters) {
  if (benign_set.rows() < 2) throw Error(ErrorCode::kInvalidInput, "Min-Max needs at least two benign gradients");
  if (direction.size() != benign_set.cols() || !(direction.norm() > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "Min-Max direction must be a non-zero vector of matching length");
  }
  const Vector mean = benign_set.colwise().mean().transpose();
  const Vector unit = direction.normalized();
  const double bound = MaxPairwiseDistance(benign_set);
  auto feasible = [&](double gamma) { return MaxDistanceTo(benign_set, mean + gamma * unit) <= bound; };
  if (!feasible(0.0)) throw Error(ErrorCode::kSearchFailed, "benign mean violates the Min-Max bound");
  if (bound == 0.0) return mean;

  double lo = 0.0;
  double hi = bound;
  for (int i = 0; i < 60 && feasible(hi); ++i) {
    lo = hi;
    hi *= 2.0;
  }
  for (std::size_t i = 0; i < std::max<std::size_t>(search_iters, 30); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return mean + lo * unit;
}

AdaptiveCrafted AttackAdaptiveSubspace(const Vector& benign_ref, const Matrix& basis,
                                       double epsilon_est, double inplane_mag, double ortho_mag,
                                       std::mt19937_64& rng) {
  if (basis.rows() != benign_ref.size() || basis.cols() != 2 || OrthonormalityError(basis) > 1e-8) {
    throw Error(ErrorCode::kInvalidInput, "adaptive attack needs an orthonormal d x 2 basis");
  }
  if (!(inplane_mag >= 0.0) || !(ortho_mag >= 0.0) || inplane_mag > epsilon_est) {
    throw Error(ErrorCode::kInvalidInput, "adaptive magnitudes must satisfy 0 <= inplane <= epsilon, ortho >= 0");
  }
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  const double theta = angle(rng);
  AdaptiveCrafted out;
  out.in_plane = basis * Eigen::Vector2d(std::cos(theta), std::sin(theta)) * inplane_mag;

  const SubspaceSplit split = DecomposeAgainstSubspace(RandomUnit(benign_ref.size(), rng), basis);
  const double norm = split.orthogonal.norm();
  out.orthogonal = norm > 1e-12 ? Vector(split.orthogonal * (ortho_mag / norm))
                                : Vector(Vector::Zero(benign_ref.size()));
  out.gradient = benign_ref + out.in_plane + out.orthogonal;
  return out;
}

bool SimulateRoundOneAcceptance(const GradientMatrix& grads, const IndexSet& known_benign,
                                const IndexSet& candidates, std::size_t min_samples, double r,
                                double gamma) {
  try {
    Points2 points;
    try {
      points = ProjectGradients(grads).ProjectedPoints();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateCovariance) throw;
      points.assign(grads.rows(), Point2::Zero());
    }
    Points2 known_points;
    for (std::size_t k : known_benign) known_points.push_back(points[k]);
    const RadiusSelection radius = SelectRadius(known_points, r);
    const ClusteringResult clusters = Dbscan(points, radius.epsilon, min_samples);
    const FilterOutcome outcome =
        FilterRoundOne(clusters, points, known_benign,
                       {known_benign[radius.root_pair.first], known_benign[radius.root_pair.second]},
                       gamma, radius.epsilon);
    return std::all_of(candidates.begin(), candidates.end(),
                       [&](std::size_t c) { return Contains(outcome.benign_core, c); });
  } catch (const Error&) {
    return false;
  }
}

std::vector<Vector> CraftPoisonedGradients(const AttackSpec& spec, const AttackContext& ctx,
                                           std::mt19937_64& rng) {
  const GradientMatrix& honest = ctx.honest;
  const std::size_t count = ctx.poisoners.size();
  if (count == 0) return {};

  auto own = [&](std::size_t p) { return honest.row(ctx.poisoners[p]); };
  auto jitter = [&]() {
    if (!spec.collusion) return 0.0;
    return kCollusionJitter * EstimateView(honest, ctx.known_benign, ctx.r).epsilon;
  };
  const Vector mean = honest.data().colwise().mean().transpose();

  std::vector<Vector> out;
  switch (spec.kind) {
    case AttackKind::kNone:
      for (std::size_t p = 0; p < count; ++p) out.push_back(own(p));
      return out;
    case AttackKind::kGaussian:
      if (spec.collusion) return Replicate(AttackGaussian(honest.cols(), spec.std, rng), count, jitter(), rng);
      for (std::size_t p = 0; p < count; ++p) out.push_back(AttackGaussian(honest.cols(), spec.std, rng));
      return out;
    case AttackKind::kSignFlip:
      if (spec.collusion) return Replicate(AttackSignFlip(mean, spec.scale), count, jitter(), rng);
      for (std::size_t p = 0; p < count; ++p) out.push_back(AttackSignFlip(own(p), spec.scale));
      return out;
    case AttackKind::kScale:
      if (spec.collusion) return Replicate(AttackScale(mean, spec.scale), count, jitter(), rng);
      for (std::size_t p = 0; p < count; ++p) out.push_back(AttackScale(own(p), spec.scale));
      return out;
    case AttackKind::kLie:
      return Replicate(AttackLie(honest.data(), spec.z), count, jitter(), rng);
    case AttackKind::kMinMax: {
      const Vector direction = mean.norm() > 0.0 ? Vector(-mean) : RandomUnit(mean.size(), rng);
      return Replicate(AttackMinMax(honest.data(), direction, spec.search_iters), count, jitter(), rng);
    }
    case AttackKind::kAdaptiveSubspace:
      return CraftAdaptive(spec, ctx, rng);
  }
  return out;
}

IndexSet PoisonSchedule::PoisonersAt(std::size_t round) const {
  IndexSet out;
  if (round >= per_round_flags.size()) return out;
  for (std::size_t m = 0; m < malicious_ids.size(); ++m) {
    if (per_round_flags[round][m]) out.push_back(malicious_ids[m]);
  }
  return out;
}

PoisonSchedule SchedulePoisoning(std::size_t n_clients, const IndexSet& malicious_ids,
                                 double malicious_ratio, std::size_t rounds,
                                 double poison_probability, std::mt19937_64& rng) {
  if (n_clients == 0 || malicious_ids.size() > n_clients) {
    throw Error(ErrorCode::kInvalidInput, "malicious set larger than the federation");
  }
  if (!(malicious_ratio >= 0.0 && malicious_ratio <= 1.0) ||
      !(poison_probability >= 0.0 && poison_probability <= 1.0)) {
    throw Error(ErrorCode::kInvalidInput, "ratio and probability must be in [0,1]");
  }
  PoisonSchedule schedule;
  schedule.malicious_ratio = malicious_ratio;
  schedule.malicious_ids = MakeIndexSet(malicious_ids);
  const auto cap = static_cast<std::size_t>(std::floor(malicious_ratio * static_cast<double>(n_clients) + 1e-9));
  const std::size_t m = schedule.malicious_ids.size();

  std::bernoulli_distribution coin(poison_probability);
  schedule.per_round_flags.assign(rounds, std::vector<bool>(m, false));
  for (std::size_t t = 0; t < rounds; ++t) {
    if (cap == 0) continue;
    auto& flags = schedule.per_round_flags[t];
    for (int attempt = 0;; ++attempt) {
      std::size_t count = 0;
      for (std::size_t i = 0; i < m; ++i) {
        flags[i] = coin(rng);
        count += flags[i] ? 1 : 0;
      }
      if (count <= cap) break;
      if (attempt == 10000) {
        // Cap far below the expected count: keep the first `cap` poisoners.
        for (std::size_t i = 0, kept = 0; i < m; ++i) {
          if (flags[i] && kept++ >= cap) flags[i] = false;
        }
        break;
      }
    }
  }
  return schedule;
}

}  // namespace encagg
