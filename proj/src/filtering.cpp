#include "encagg/filtering.hpp"

#include <limits>

#include "encagg/error.hpp"

namespace encagg {

BenignClusterChoice IdentifyBenignCluster(const ClusteringResult& clustering,
                                          std::pair<std::size_t, std::size_t> root_pair,
                                          const Points2& points) {
  const auto [a, b] = root_pair;
  if (a >= clustering.labels.size() || b >= clustering.labels.size() || a >= points.size() ||
      b >= points.size()) {
    throw Error(ErrorCode::kInvalidInput, "root index out of range");
  }
  const int la = clustering.labels[a];
  const int lb = clustering.labels[b];
  if (la != kNoise && lb != kNoise && la != lb) {
    throw Error(ErrorCode::kInconsistentLabels, "root clients fall in different clusters");
  }

  BenignClusterChoice choice;
  const int root_label = la != kNoise ? la : lb;
  if (root_label != kNoise) {
    choice.label = root_label;
    return choice;
  }
  if (clustering.cluster_count() > 1) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < clustering.centers.size(); ++c) {
      const Point2& center = clustering.centers[c];
      const double avg = 0.5 * ((center - points[a]).norm() + (center - points[b]).norm());
      if (avg < best) {
        best = avg;
        choice.label = static_cast<int>(c);
      }
    }
    return choice;
  }
  choice.fallback = true;
  Point2 sum = Point2::Zero();
  for (const auto& p : points) sum += p;
  choice.provisional_center = sum / static_cast<double>(points.size());
  return choice;
}

IndexSet ApplyDensityConstraint(const IndexSet& candidates, const Points2& points,
                                const IndexSet& known_benign, double gamma, double epsilon) {
  const double limit = gamma * epsilon;
  IndexSet kept;
  for (std::size_t i : candidates) {
    for (std::size_t k : known_benign) {
      if ((points[i] - points[k]).norm() <= limit) {
        kept.push_back(i);
        break;
      }
    }
  }
  return MakeIndexSet(std::move(kept));
}

FilterOutcome FilterRoundOne(const ClusteringResult& clustering, const Points2& points,
                             const IndexSet& known_benign,
                             std::pair<std::size_t, std::size_t> root_pair, double gamma,
                             double epsilon) {
  if (clustering.labels.size() != points.size()) {
    throw Error(ErrorCode::kInvalidInput, "clustering and point count differ");
  }
  const BenignClusterChoice choice = IdentifyBenignCluster(clustering, root_pair, points);

  FilterOutcome out;
  out.benign_label = choice.label;
  out.fallback_center_used = choice.fallback;
  out.provisional_center = choice.provisional_center;

  // With label kNoise this is the noise set itself.
  IndexSet benign_cluster;
  for (std::size_t i = 0; i < clustering.labels.size(); ++i) {
    if (clustering.labels[i] == choice.label) benign_cluster.push_back(i);
  }
  out.benign_core = ApplyDensityConstraint(benign_cluster, points, known_benign, gamma, epsilon);
  out.retained = SetUnion(out.benign_core, clustering.noise);
  return out;
}

}  // namespace encagg
