#include "encagg/simulation.hpp"

#include <random>

#include <gtest/gtest.h>

#include "encagg/error.hpp"
#include "oracles.hpp"
#include "verify.hpp"

namespace encagg {
namespace {

ExperimentConfig Short(std::size_t rounds) {
  ExperimentConfig c;
  c.rounds = rounds;
  return c;
}

TEST(MakeFederation, ZeroHeterogeneityMeansNoShift) {
  ExperimentConfig c;
  c.task.heterogeneity = 0.0;
  const Federation fed = MakeFederation(c);
  for (const auto& client : fed.clients) EXPECT_EQ(client.input_shift.norm(), 0.0);
}

TEST(MakeFederation, ShiftLengthIsHeterogeneity) {
  ExperimentConfig c;
  c.task.heterogeneity = 2.5;
  for (const auto& client : MakeFederation(c).clients) EXPECT_NEAR(client.input_shift.norm(), 2.5, 1e-12);
}

TEST(MakeFederation, RoleCounts) {
  ExperimentConfig c;
  c.k = 2;
  c.malicious_ratio = 0.6;
  const Federation fed = MakeFederation(c);
  EXPECT_EQ(fed.malicious.size(), 12u);
  EXPECT_EQ(fed.known_benign.size(), 2u);
  EXPECT_TRUE(SetIntersection(fed.malicious, fed.known_benign).empty());
  for (const auto& client : fed.clients) {
    if (Contains(fed.malicious, client.id)) EXPECT_EQ(client.role, ClientRole::kMalicious);
    if (Contains(fed.known_benign, client.id)) EXPECT_EQ(client.role, ClientRole::kKnownBenign);
  }
}

TEST(MakeFederation, HoldsOutTwentyPercent) {
  ExperimentConfig c;
  const Federation fed = MakeFederation(c);
  EXPECT_EQ(fed.clients[0].shard.x.rows(), 200);
  EXPECT_EQ(fed.holdout.x.rows(), 50 * static_cast<Eigen::Index>(c.n));
}

TEST(MakeFederation, SameSeedSameShards) {
  ExperimentConfig c;
  c.seed = 17;
  const Federation a = MakeFederation(c);
  const Federation b = MakeFederation(c);
  ASSERT_EQ(a.clients.size(), b.clients.size());
  for (std::size_t i = 0; i < a.clients.size(); ++i) {
    EXPECT_EQ(a.clients[i].shard.x, b.clients[i].shard.x);
    EXPECT_EQ(a.clients[i].shard.y, b.clients[i].shard.y);
  }
  EXPECT_EQ(a.holdout.x, b.holdout.x);
  c.seed = 18;
  EXPECT_NE(MakeFederation(c).clients[0].shard.x, a.clients[0].shard.x);
}

TEST(MakeFederation, RejectsBadConfig) {
  ExperimentConfig c;
  c.k = 11;
  EXPECT_THROW(MakeFederation(c), Error);
  c = ExperimentConfig{};
  c.malicious_ratio = 0.9;
  EXPECT_THROW(MakeFederation(c), Error);
}

TEST(TaskGradient, LogisticZeroDataIsZero) {
  const Matrix x = Matrix::Zero(4, 3);
  const Vector y = Vector::Ones(4);
  EXPECT_EQ(TaskGradient(TaskKind::kLogisticClassification, x, y, Vector::Ones(3)), Vector(Vector::Zero(3)));
}

TEST(TaskGradient, LinearRegressionTwoPoints) {
  Matrix x(2, 2);
  x << 1, 2, 3, -1;
  const Vector y = Eigen::Vector2d(1, 0);
  const Vector w = Eigen::Vector2d(0.5, 0.5);
  // Residuals: 1.5 - 1 = 0.5 and 1 - 0 = 1; gradient = X^T r / 2.
  const Vector expected = Eigen::Vector2d((1 * 0.5 + 3 * 1.0) / 2.0, (2 * 0.5 - 1 * 1.0) / 2.0);
  EXPECT_LT((TaskGradient(TaskKind::kLinearRegression, x, y, w) - expected).norm(), 1e-15);
}

TEST(TaskGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  for (TaskKind kind : {TaskKind::kLinearRegression, TaskKind::kLogisticClassification}) {
    Matrix x(12, 5);
    Vector y(12), w(5);
    for (Eigen::Index i = 0; i < 12; ++i) {
      for (Eigen::Index j = 0; j < 5; ++j) x(i, j) = normal(rng);
      y(i) = kind == TaskKind::kLinearRegression ? normal(rng) : static_cast<double>(rng() % 2);
    }
    for (Eigen::Index j = 0; j < 5; ++j) w(j) = normal(rng);
    const Vector analytic = TaskGradient(kind, x, y, w);
    const Vector numeric = oracle::FiniteDifferenceGradient([&](const Vector& v) { return TaskLoss(kind, x, y, v); }, w);
    for (Eigen::Index j = 0; j < 5; ++j) EXPECT_LE(verify::RelativeError(analytic(j), numeric(j)), 1e-5);
  }
}

TEST(LocalGradient, FullBatchEqualsShardGradient) {
  const Federation fed = MakeFederation(ExperimentConfig{});
  std::mt19937_64 rng(5);
  const Vector w = Vector::Constant(static_cast<Eigen::Index>(fed.task.d), 0.1);
  const ClientState& c = fed.clients[3];
  const Vector full = LocalGradient(c, fed.task.kind, w, 10000, rng);
  EXPECT_LT((full - TaskGradient(fed.task.kind, c.shard.x, c.shard.y, w)).norm(), 1e-12);
}

TEST(ComputeFilterMetrics, Examples) {
  IndexSet all(20);
  for (std::size_t i = 0; i < 20; ++i) all[i] = i;
  const IndexSet poisoners{0, 1, 2, 3, 4, 5, 6, 7};
  FilterMetrics m = ComputeFilterMetrics(SetDifference(all, poisoners), poisoners, 20);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  m = ComputeFilterMetrics(all, poisoners, 20);
  EXPECT_DOUBLE_EQ(m.precision, 0.6);
  EXPECT_EQ(m.recall, 1.0);
  m = ComputeFilterMetrics({}, poisoners, 20);
  EXPECT_FALSE(m.precision_defined);
  EXPECT_EQ(m.precision, 1.0);
}

TEST(ComputeFilterMetrics, RandomAgainstSetCounting) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    IndexSet kept, bad;
    for (std::size_t i = 0; i < 20; ++i) {
      if (rng() % 2) kept.push_back(i);
      if (rng() % 3 == 0) bad.push_back(i);
    }
    if (kept.empty()) continue;
    std::size_t good_kept = 0;
    for (std::size_t i : kept) good_kept += Contains(bad, i) ? 0 : 1;
    const FilterMetrics m = ComputeFilterMetrics(kept, bad, 20);
    EXPECT_DOUBLE_EQ(m.precision, static_cast<double>(good_kept) / static_cast<double>(kept.size()));
    EXPECT_DOUBLE_EQ(m.recall, static_cast<double>(good_kept) / static_cast<double>(20 - bad.size()));
  }
}

TEST(RunExperiment, MeanReachesCentralizedReference) {
  ExperimentConfig c = Short(200);
  c.aggregator = AggregatorKind::kMean;
  const ExperimentResult r = RunExperiment(c);

  // Oracle: full-batch gradient descent on the pooled training shards.
  const Federation fed = MakeFederation(c);
  Eigen::Index rows = 0;
  for (const auto& client : fed.clients) rows += client.shard.x.rows();
  Matrix x(rows, static_cast<Eigen::Index>(fed.task.d));
  Vector y(rows);
  Eigen::Index at = 0;
  for (const auto& client : fed.clients) {
    x.middleRows(at, client.shard.x.rows()) = client.shard.x;
    y.segment(at, client.shard.y.size()) = client.shard.y;
    at += client.shard.x.rows();
  }
  Vector w = Vector::Zero(static_cast<Eigen::Index>(fed.task.d));
  for (int step = 0; step < 500; ++step) w -= c.learning_rate * TaskGradient(fed.task.kind, x, y, w);
  const double reference = TaskAccuracy(fed.task.kind, fed.holdout.x, fed.holdout.y, w);
  EXPECT_GE(r.accuracy.back(), 0.9 * reference);
}

TEST(RunExperiment, SignFlipCollapsesPlainMean) {
  ExperimentConfig clean = Short(150);
  clean.aggregator = AggregatorKind::kMean;
  ExperimentConfig attacked = clean;
  attacked.attack.kind = AttackKind::kSignFlip;
  attacked.malicious_ratio = 0.6;
  EXPECT_LT(RunExperiment(attacked).final_accuracy, 0.6 * RunExperiment(clean).final_accuracy);
}

TEST(RunExperiment, BitIdenticalTrajectories) {
  ExperimentConfig c = Short(30);
  c.attack.kind = AttackKind::kLie;
  c.malicious_ratio = 0.4;
  c.poison_probability = 0.5;
  const ExperimentResult a = RunExperiment(c);
  const ExperimentResult b = RunExperiment(c);
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.final_weights, b.final_weights);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t t = 0; t < a.records.size(); ++t) {
    EXPECT_EQ(a.records[t].final_benign, b.records[t].final_benign);
    EXPECT_EQ(a.records[t].generator_losses.l_total, b.records[t].generator_losses.l_total);
  }
}

TEST(RunExperiment, RoundInvariants) {
  ExperimentConfig c = Short(40);
  c.attack.kind = AttackKind::kSignFlip;
  c.malicious_ratio = 0.4;
  c.poison_probability = 0.5;
  const Federation fed = MakeFederation(c);
  const ExperimentResult r = RunExperiment(c);
  ASSERT_EQ(r.records.size(), 40u);
  for (std::size_t t = 0; t < r.records.size(); ++t) {
    const RoundRecord& rec = r.records[t];
    EXPECT_EQ(rec.round_index, t);
    EXPECT_TRUE(SetIntersection(rec.final_benign, rec.discarded).empty());
    EXPECT_EQ(SetUnion(rec.final_benign, rec.discarded).size(), c.n);
    EXPECT_LE(r.poisoners[t].size(), 8u);
    if (!rec.fallback_used && rec.benign_label_r2 != kNoise) {
      // Known-benign clients in the round-two benign cluster are never dropped by the density check.
      EXPECT_EQ(SetIntersection(rec.final_benign, fed.known_benign).empty(), false);
    }
  }
}

TEST(RunExperiment, EveryAggregatorRuns) {
  for (AggregatorKind kind : {AggregatorKind::kMean, AggregatorKind::kKrum, AggregatorKind::kMedian,
                              AggregatorKind::kTrimmedMean, AggregatorKind::kFlTrust, AggregatorKind::kEnCAgg}) {
    ExperimentConfig c = Short(10);
    c.aggregator = kind;
    c.attack.kind = AttackKind::kMinMax;
    c.malicious_ratio = 0.2;
    const ExperimentResult r = RunExperiment(c);
    EXPECT_EQ(r.accuracy.size(), 10u);
    EXPECT_TRUE(r.final_weights.allFinite());
  }
}

TEST(DeriveSeed, StableAndDistinct) {
  EXPECT_EQ(DeriveSeed(1, 2, 3, 4), DeriveSeed(1, 2, 3, 4));
  EXPECT_NE(DeriveSeed(1, 2, 3, 4), DeriveSeed(1, 2, 4, 3));
  EXPECT_NE(DeriveSeed(1, 2), DeriveSeed(2, 2));
}

}  // namespace
}  // namespace encagg
