#include "encagg/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "encagg/error.hpp"
#include "oracles.hpp"

namespace encagg {
namespace {

Points2 RandomPoints(std::size_t m, double spread, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, spread);
  Points2 pts;
  for (std::size_t i = 0; i < m; ++i) pts.emplace_back(u(rng), u(rng));
  return pts;
}

// Partition with member ids mapped back through `order` and re-sorted.
oracle::Partition Unpermute(const oracle::Partition& p, const std::vector<std::size_t>& order) {
  oracle::Partition out;
  for (const auto& c : p.clusters) {
    std::vector<std::size_t> members;
    for (std::size_t i : c) members.push_back(order[i]);
    std::sort(members.begin(), members.end());
    out.clusters.push_back(members);
  }
  std::sort(out.clusters.begin(), out.clusters.end());
  for (std::size_t i : p.noise) out.noise.push_back(order[i]);
  std::sort(out.noise.begin(), out.noise.end());
  return out;
}

oracle::Partition Sorted(oracle::Partition p) {
  std::sort(p.clusters.begin(), p.clusters.end());
  return p;
}

TEST(SelectRadius, TwoPointsUseTheOnlyDistance) {
  for (double r : {0.01, 0.5, 0.99}) {
    const RadiusSelection s = SelectRadius({{0, 0}, {3, 4}}, r);
    EXPECT_DOUBLE_EQ(s.epsilon, 5.0);
    EXPECT_EQ(s.root_pair, (std::pair<std::size_t, std::size_t>{0, 1}));
  }
}

TEST(SelectRadius, RankArithmeticOnGolombRuler) {
  // Marks 0, 1, 4, 6 give every distance 1..6 exactly once.
  const Points2 pts{{0, 0}, {1, 0}, {4, 0}, {6, 0}};
  const RadiusSelection s = SelectRadius(pts, 0.5);
  EXPECT_DOUBLE_EQ(s.epsilon, 3.0);
  EXPECT_EQ(s.sorted_distances, (std::vector<double>{1, 2, 3, 4, 5, 6}));
  EXPECT_NEAR((pts[s.root_pair.first] - pts[s.root_pair.second]).norm(), s.epsilon, 1e-12);
  EXPECT_EQ(s.root_pair, (std::pair<std::size_t, std::size_t>{1, 2}));
}

TEST(SelectRadius, DefaultCoefficientWithFivePointsPicksSecondSmallest) {
  std::mt19937_64 rng(4);
  const Points2 pts = RandomPoints(5, 10.0, rng);
  std::vector<double> d;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = i + 1; j < 5; ++j) d.push_back((pts[i] - pts[j]).norm());
  }
  std::sort(d.begin(), d.end());
  EXPECT_DOUBLE_EQ(SelectRadius(pts, kDefaultRadiusCoefficient).epsilon, d[1]);
}

TEST(SelectRadius, StaysWithinDistanceRange) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng() % 9;
    const Points2 pts = RandomPoints(k, 5.0, rng);
    const double r = std::uniform_real_distribution<double>(0.001, 0.999)(rng);
    const RadiusSelection s = SelectRadius(pts, r);
    EXPECT_GE(s.epsilon, s.sorted_distances.front());
    EXPECT_LE(s.epsilon, s.sorted_distances.back());
    const auto rank = static_cast<std::size_t>(std::ceil(r * static_cast<double>(s.sorted_distances.size())));
    EXPECT_EQ(s.epsilon, s.sorted_distances[std::max<std::size_t>(rank, 1) - 1]);
  }
}

TEST(SelectRadius, RejectsBadInput) {
  EXPECT_THROW(SelectRadius({{0, 0}}, 0.2), Error);
  EXPECT_THROW(SelectRadius({{0, 0}, {1, 1}}, 0.0), Error);
  EXPECT_THROW(SelectRadius({{0, 0}, {1, 1}}, 1.0), Error);
}

TEST(Dbscan, SinglePointIsNoise) {
  const ClusteringResult r = Dbscan({{1, 2}}, 1.0, 5);
  EXPECT_EQ(r.labels, (std::vector<int>{kNoise}));
  EXPECT_EQ(r.noise, (IndexSet{0}));
  EXPECT_EQ(r.cluster_count(), 0u);
}

TEST(Dbscan, IdenticalPointsFormOneCluster) {
  const Points2 pts(6, Point2(2.5, -1.0));
  const ClusteringResult r = Dbscan(pts, 0.0, 5);
  ASSERT_EQ(r.cluster_count(), 1u);
  EXPECT_EQ(r.clusters[0].size(), 6u);
  EXPECT_TRUE(r.noise.empty());
  EXPECT_EQ(r.centers[0], Point2(2.5, -1.0));
}

TEST(Dbscan, TwoBlobsAndAnIsolatedPoint) {
  const double eps = 1.0;
  Points2 pts;
  for (int i = 0; i < 6; ++i) pts.emplace_back(0.1 * i, 0.05 * (i % 2));
  for (int i = 0; i < 6; ++i) pts.emplace_back(10.0 + 0.1 * i, 0.05 * (i % 3));
  pts.emplace_back(5.0, 5.0);
  const ClusteringResult r = Dbscan(pts, eps, 5);
  EXPECT_EQ(r.cluster_count(), 2u);
  EXPECT_EQ(r.noise, (IndexSet{12}));
  EXPECT_EQ(oracle::PartitionFromLabels(r.labels), oracle::BruteForceDbscan(pts, eps, 5));
}

TEST(Dbscan, ClosedBallCountsSelf) {
  // Exactly min_samples points at pairwise distance <= eps, with the boundary hit.
  const Points2 pts{{0, 0}, {1, 0}, {0.5, 0}, {0.25, 0}, {0.75, 0}};
  const ClusteringResult r = Dbscan(pts, 1.0, 5);
  EXPECT_EQ(r.cluster_count(), 1u);
  EXPECT_TRUE(r.noise.empty());
}

TEST(Dbscan, ClusterIdsFollowFirstCorePoint) {
  Points2 pts;
  for (int i = 0; i < 5; ++i) pts.emplace_back(20.0 + 0.01 * i, 0);
  for (int i = 0; i < 5; ++i) pts.emplace_back(0.01 * i, 0);
  const ClusteringResult r = Dbscan(pts, 0.1, 5);
  EXPECT_EQ(r.labels[0], 0);
  EXPECT_EQ(r.labels[5], 1);
}

TEST(Dbscan, BorderJoinsLowestIndexCoreNeighbour) {
  // Point 0 sits between two blobs and is a border point of both.
  Points2 pts{{0, 0}};
  for (int i = 0; i < 5; ++i) pts.emplace_back(-1.0 - 0.01 * i, 0);
  for (int i = 0; i < 5; ++i) pts.emplace_back(1.0 + 0.01 * i, 0);
  const ClusteringResult r = Dbscan(pts, 1.0, 5);
  ASSERT_EQ(r.cluster_count(), 2u);
  EXPECT_FALSE(r.core[0]);
  EXPECT_EQ(r.labels[0], r.labels[1]);
}

TEST(Dbscan, MatchesOracleOnRandomInstances) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng() % 50;
    const Points2 pts = RandomPoints(m, 10.0, rng);
    const double eps = std::uniform_real_distribution<double>(0.3, 3.0)(rng);
    const std::size_t min_samples = 1 + rng() % 6;
    const ClusteringResult r = Dbscan(pts, eps, min_samples);
    ASSERT_EQ(oracle::PartitionFromLabels(r.labels), oracle::BruteForceDbscan(pts, eps, min_samples))
        << "trial " << trial;
  }
}

TEST(Dbscan, PartitionInvariants) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Points2 pts = RandomPoints(40, 8.0, rng);
    const double eps = 1.0;
    const ClusteringResult r = Dbscan(pts, eps, 4);
    std::size_t members = 0;
    for (std::size_t c = 0; c < r.cluster_count(); ++c) {
      members += r.clusters[c].size();
      bool has_core = false;
      Point2 mean = Point2::Zero();
      for (std::size_t i : r.clusters[c]) {
        EXPECT_EQ(r.labels[i], static_cast<int>(c));
        has_core = has_core || r.core[i];
        mean += pts[i];
      }
      EXPECT_TRUE(has_core);
      mean /= static_cast<double>(r.clusters[c].size());
      EXPECT_LT((mean - r.centers[c]).norm(), 1e-12);
    }
    EXPECT_EQ(r.noise.size(), pts.size() - members);
  }
}

TEST(Dbscan, PermutationKeepsCorePartitionAndNoise) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const Points2 pts = RandomPoints(30, 6.0, rng);
    std::vector<std::size_t> order(pts.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Points2 shuffled;
    for (std::size_t i : order) shuffled.push_back(pts[i]);

    const ClusteringResult a = Dbscan(pts, 1.0, 4);
    const ClusteringResult b = Dbscan(shuffled, 1.0, 4);
    const oracle::Partition pa = Sorted(oracle::PartitionFromLabels(a.labels));
    const oracle::Partition pb = Unpermute(oracle::PartitionFromLabels(b.labels), order);
    EXPECT_EQ(pa.noise, pb.noise);

    // Border points reachable from two clusters may legitimately move with the
    // scan order; core points never do.
    std::vector<int> core_a(pts.size(), kNoise);
    std::vector<int> core_b(pts.size(), kNoise);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (a.core[i]) core_a[i] = a.labels[i];
      if (b.core[i]) core_b[order[i]] = b.labels[i];
    }
    EXPECT_EQ(Sorted(oracle::PartitionFromLabels(core_a)),
              Sorted(oracle::PartitionFromLabels(core_b)));

    bool shared_border = false;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (a.core[i] || a.labels[i] == kNoise) continue;
      int seen = kNoise;
      for (std::size_t j = 0; j < pts.size(); ++j) {
        if (!a.core[j] || (pts[i] - pts[j]).norm() > 1.0) continue;
        if (seen != kNoise && seen != a.labels[j]) shared_border = true;
        seen = a.labels[j];
      }
    }
    if (!shared_border) EXPECT_EQ(pa, pb);
  }
}

TEST(Dbscan, LargerRadiusNeverAddsNoise) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const Points2 pts = RandomPoints(35, 10.0, rng);
    std::size_t previous = pts.size();
    for (double eps = 0.2; eps < 6.0; eps += 0.2) {
      const std::size_t noise = Dbscan(pts, eps, 5).noise.size();
      EXPECT_LE(noise, previous);
      previous = noise;
    }
  }
}

TEST(Dbscan, RejectsNonFinite) {
  EXPECT_THROW(Dbscan({{0, 0}, {std::numeric_limits<double>::quiet_NaN(), 0}}, 1.0, 2), Error);
}

TEST(ClusterCenters, MeanOfMembers) {
  const Points2 pts{{0, 0}, {2, 0}};
  const ClusteringResult r = Dbscan(pts, 2.0, 2);
  const Points2 centers = ClusterCenters(r, pts);
  ASSERT_EQ(centers.size(), 1u);
  EXPECT_EQ(centers[0], Point2(1, 0));
}

TEST(ClusterCenters, ThreeClusterInstanceAgainstDirectSums) {
  std::mt19937_64 rng(55);
  std::normal_distribution<double> noise(0.0, 0.1);
  Points2 pts;
  const Point2 anchors[] = {{0, 0}, {5, 5}, {-5, 5}};
  for (const auto& a : anchors) {
    for (int i = 0; i < 8; ++i) pts.push_back(a + Point2(noise(rng), noise(rng)));
  }
  const ClusteringResult r = Dbscan(pts, 1.0, 5);
  ASSERT_EQ(r.cluster_count(), 3u);
  for (std::size_t c = 0; c < 3; ++c) {
    Point2 sum = Point2::Zero();
    for (std::size_t i = c * 8; i < c * 8 + 8; ++i) sum += pts[i];
    EXPECT_LT((ClusterCenters(r, pts)[c] - sum / 8.0).norm(), 1e-12);
  }
}

}  // namespace
}  // namespace encagg
