#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "encagg/types.hpp"

namespace encagg {

inline constexpr int kNoise = -1;
inline constexpr std::size_t kDefaultMinSamples = 5;
inline constexpr double kDefaultRadiusCoefficient = 0.2;

struct RadiusSelection {
  double epsilon = 0.0;
  // Positions (into the known-benign point list) of the pair at distance epsilon.
  std::pair<std::size_t, std::size_t> root_pair{0, 1};
  std::vector<double> sorted_distances;
};

// Picks the ceil(r * C(k,2))-th smallest pairwise distance among the known
// benign points. Ties in distance resolve to the lexicographically smallest
// pair (i, j), i < j.
RadiusSelection SelectRadius(const Points2& known_points, double r);

struct ClusteringResult {
  std::vector<int> labels;                     // cluster id or kNoise
  std::vector<IndexSet> clusters;              // members of each cluster id
  Points2 centers;                             // per-cluster mean
  IndexSet noise;
  std::vector<bool> core;                      // core-point flags

  std::size_t cluster_count() const { return clusters.size(); }
};

// DBSCAN with a closed neighbourhood (distance <= epsilon) that counts the
// point itself. Cluster ids follow the order in which their lowest-index core
// point is met; a border point belongs to the cluster of its lowest-index core
// neighbour.
ClusteringResult Dbscan(const Points2& points, double epsilon, std::size_t min_samples);

Points2 ClusterCenters(const ClusteringResult& result, const Points2& points);

}  // namespace encagg
