#include "encagg/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <tuple>

#include "encagg/error.hpp"

namespace encagg {

RadiusSelection SelectRadius(const Points2& known_points, double r) {
  const std::size_t k = known_points.size();
  if (k < 2) throw Error(ErrorCode::kInvalidInput, "radius selection needs at least two known benign points");
  if (!(r > 0.0 && r < 1.0)) throw Error(ErrorCode::kInvalidInput, "r must be in (0,1)");

  struct PairDistance {
    double distance;
    std::size_t i;
    std::size_t j;
  };
  std::vector<PairDistance> pairs;
  pairs.reserve(k * (k - 1) / 2);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      pairs.push_back({(known_points[i] - known_points[j]).norm(), i, j});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const PairDistance& a, const PairDistance& b) {
    return std::tie(a.distance, a.i, a.j) < std::tie(b.distance, b.i, b.j);
  });

  const double total = static_cast<double>(pairs.size());
  // Guard against r * C landing a hair above an integer through rounding.
  auto rank = static_cast<std::size_t>(std::ceil(r * total - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, pairs.size());

  RadiusSelection out;
  out.epsilon = pairs[rank - 1].distance;
  out.root_pair = {pairs[rank - 1].i, pairs[rank - 1].j};
  out.sorted_distances.reserve(pairs.size());
  for (const auto& p : pairs) out.sorted_distances.push_back(p.distance);
  return out;
}

ClusteringResult Dbscan(const Points2& points, double epsilon, std::size_t min_samples) {
  if (points.empty()) throw Error(ErrorCode::kInvalidInput, "DBSCAN needs at least one point");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw Error(ErrorCode::kInvalidInput, "epsilon must be finite and >= 0");
  if (min_samples < 1) throw Error(ErrorCode::kInvalidInput, "min_samples must be >= 1");
  for (const auto& p : points) {
    if (!p.allFinite()) throw Error(ErrorCode::kInvalidInput, "non-finite point coordinates");
  }

  const std::size_t m = points.size();
  std::vector<std::vector<std::size_t>> neighbours(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if ((points[i] - points[j]).norm() <= epsilon) neighbours[i].push_back(j);
    }
  }

  ClusteringResult result;
  result.labels.assign(m, kNoise);
  result.core.assign(m, false);
  for (std::size_t i = 0; i < m; ++i) result.core[i] = neighbours[i].size() >= min_samples;

  // Grow clusters over core points only; borders are attached afterwards so
  // their assignment does not depend on expansion order.
  int next_id = 0;
  for (std::size_t seed = 0; seed < m; ++seed) {
    if (!result.core[seed] || result.labels[seed] != kNoise) continue;
    const int id = next_id++;
    std::deque<std::size_t> frontier{seed};
    result.labels[seed] = id;
    while (!frontier.empty()) {
      const std::size_t p = frontier.front();
      frontier.pop_front();
      for (std::size_t q : neighbours[p]) {
        if (result.core[q] && result.labels[q] == kNoise) {
          result.labels[q] = id;
          frontier.push_back(q);
        }
      }
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (result.core[i]) continue;
    for (std::size_t q : neighbours[i]) {  // ascending index
      if (result.core[q]) {
        result.labels[i] = result.labels[q];
        break;
      }
    }
  }

  result.clusters.assign(static_cast<std::size_t>(next_id), {});
  for (std::size_t i = 0; i < m; ++i) {
    if (result.labels[i] == kNoise) {
      result.noise.push_back(i);
    } else {
      result.clusters[static_cast<std::size_t>(result.labels[i])].push_back(i);
    }
  }
  result.centers = ClusterCenters(result, points);
  return result;
}

Points2 ClusterCenters(const ClusteringResult& result, const Points2& points) {
  Points2 centers;
  centers.reserve(result.clusters.size());
  for (const auto& members : result.clusters) {
    Point2 sum = Point2::Zero();
    for (std::size_t i : members) sum += points[i];
    centers.push_back(sum / static_cast<double>(members.size()));
  }
  return centers;
}

}  // namespace encagg
