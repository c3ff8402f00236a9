#pragma once

#include <cstddef>
#include <utility>

#include "encagg/clustering.hpp"
#include "encagg/types.hpp"

namespace encagg {

inline constexpr double kDefaultDensityConstraint = 3.0;

struct BenignClusterChoice {
  int label = kNoise;
  // Roots were noise and at most one cluster exists.
  bool fallback = false;
  // Mean of all points, recorded as the provisional centre in the fallback branch.
  Point2 provisional_center = Point2::Zero();
};

// Root-guided identification of the benign cluster:
//  1. roots carry a cluster label -> that cluster;
//  2. roots are noise and several clusters exist -> the cluster whose centre
//     has the smallest mean distance to the two roots (lowest id on ties);
//  3. otherwise kNoise with the fallback flag set.
// If exactly one root is noise the other root's label is used. Two different
// cluster labels raise kInconsistentLabels.
BenignClusterChoice IdentifyBenignCluster(const ClusteringResult& clustering,
                                          std::pair<std::size_t, std::size_t> root_pair,
                                          const Points2& points);

// Members of `candidates` within gamma * epsilon of at least one known benign point.
IndexSet ApplyDensityConstraint(const IndexSet& candidates, const Points2& points,
                                const IndexSet& known_benign, double gamma, double epsilon);

struct FilterOutcome {
  int benign_label = kNoise;
  IndexSet benign_core;
  IndexSet retained;
  bool fallback_center_used = false;
  Point2 provisional_center = Point2::Zero();
};

FilterOutcome FilterRoundOne(const ClusteringResult& clustering, const Points2& points,
                             const IndexSet& known_benign,
                             std::pair<std::size_t, std::size_t> root_pair, double gamma,
                             double epsilon);

}  // namespace encagg
