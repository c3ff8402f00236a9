#include "encagg/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "encagg/error.hpp"
#include "encagg/projection.hpp"
#include "encagg/simulation.hpp"

namespace encagg {
namespace {

Matrix RandomMatrix(Eigen::Index n, Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = normal(rng);
  }
  return m;
}

double MaxPairwise(const Matrix& m) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.rows(); ++j) best = std::max(best, (m.row(i) - m.row(j)).norm());
  }
  return best;
}

double MaxDistanceTo(const Matrix& m, const Vector& v) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) best = std::max(best, (m.row(i).transpose() - v).norm());
  return best;
}

Matrix HonestGradients(const Federation& fed, const Vector& weights, std::mt19937_64& rng) {
  Matrix g(static_cast<Eigen::Index>(fed.clients.size()), static_cast<Eigen::Index>(fed.task.d));
  for (std::size_t i = 0; i < fed.clients.size(); ++i) {
    g.row(static_cast<Eigen::Index>(i)) = LocalGradient(fed.clients[i], fed.task.kind, weights, 16, rng).transpose();
  }
  return g;
}

TEST(AttackSignFlip, Examples) {
  EXPECT_EQ(AttackSignFlip(Eigen::Vector2d(1, -2), 1.0), Vector(Eigen::Vector2d(-1, 2)));
  EXPECT_EQ(AttackSignFlip(Vector::Zero(3), 2.0), Vector(Vector::Zero(3)));
  EXPECT_EQ(AttackSignFlip(Eigen::Vector2d(1, 0), 10.0), Vector(Eigen::Vector2d(-10, 0)));
  EXPECT_THROW(AttackSignFlip(Eigen::Vector2d(1, 0), 0.0), Error);
}

TEST(AttackLie, ConstantColumns) {
  Matrix m(3, 2);
  m << 4, -1, 4, -1, 4, -1;
  EXPECT_EQ(AttackLie(m, 1.5), Vector(Eigen::Vector2d(4, -1)));
}

TEST(AttackLie, PopulationStd) {
  Matrix m(2, 2);
  m << 0, 5, 2, 5;
  EXPECT_NEAR(AttackLie(m, 1.0)(0), 0.0, 1e-15);
}

TEST(AttackLie, LargerZLowersEveryCoordinate) {
  std::mt19937_64 rng(1);
  const Matrix m = RandomMatrix(6, 5, rng);
  const Vector a = AttackLie(m, 1.0);
  const Vector b = AttackLie(m, 2.0);
  for (Eigen::Index j = 0; j < 5; ++j) EXPECT_LT(b(j), a(j));
}

TEST(AttackLie, NeedsTwoRows) {
  EXPECT_THROW(AttackLie(Matrix::Ones(1, 3), 1.0), Error);
}

TEST(AttackMinMax, CoincidentBenignGivesMean) {
  const Matrix m = Matrix::Ones(4, 3);
  EXPECT_LT((AttackMinMax(m, Vector::Unit(3, 0), 40) - Vector::Ones(3)).norm(), 1e-12);
}

TEST(AttackMinMax, TwoPointClosedForm) {
  Matrix m(2, 2);
  m << 0, 0, 2, 0;
  const Vector out = AttackMinMax(m, Eigen::Vector2d(0, 1), 60);
  EXPECT_NEAR(out(0), 1.0, 1e-12);
  EXPECT_NEAR(out(1), std::sqrt(3.0), 1e-6);
}

TEST(AttackMinMax, StaysFeasibleOnRandomInstances) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix m = RandomMatrix(8, 6, rng);
    Vector dir = RandomMatrix(6, 1, rng).col(0);
    dir.normalize();
    const Vector out = AttackMinMax(m, dir, 40);
    EXPECT_TRUE(out.allFinite());
    EXPECT_LE(MaxDistanceTo(m, out), MaxPairwise(m) + 1e-6);
  }
}

TEST(AttackAdaptiveSubspace, PureInPlaneShift) {
  std::mt19937_64 rng(5);
  const ProjectionResult p = ProjectGradients(GradientMatrix(RandomMatrix(10, 8, rng)));
  const Vector ref = RandomMatrix(8, 1, rng).col(0);
  const AdaptiveCrafted c = AttackAdaptiveSubspace(ref, p.basis, 1.0, 0.4, 0.0, rng);
  EXPECT_NEAR((p.Project(c.gradient) - p.Project(ref)).norm(), 0.4, 1e-12);
}

TEST(AttackAdaptiveSubspace, PureOrthogonalShiftIsInvisible) {
  std::mt19937_64 rng(7);
  const ProjectionResult p = ProjectGradients(GradientMatrix(RandomMatrix(10, 8, rng)));
  const Vector ref = RandomMatrix(8, 1, rng).col(0);
  const AdaptiveCrafted c = AttackAdaptiveSubspace(ref, p.basis, 1.0, 0.0, 3.0, rng);
  EXPECT_LT((p.Project(c.gradient) - p.Project(ref)).norm(), 1e-8);
  EXPECT_NEAR((c.gradient - ref).norm(), 3.0, 1e-12);
}

TEST(AttackAdaptiveSubspace, StealthIdentity) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const ProjectionResult p = ProjectGradients(GradientMatrix(RandomMatrix(12, 20, rng)));
    const Vector ref = RandomMatrix(20, 1, rng).col(0);
    const double ortho = std::uniform_real_distribution<double>(0.0, 50.0)(rng);
    const AdaptiveCrafted c = AttackAdaptiveSubspace(ref, p.basis, 1.0, 0.5, ortho, rng);
    EXPECT_LE((p.basis.transpose() * c.orthogonal).norm(), 1e-8 * ortho + 1e-300);
    EXPECT_LE((p.basis.transpose() * (c.gradient - ref - c.in_plane)).norm(), 1e-8 * (c.gradient.norm() + 1.0));
  }
}

TEST(AttackAdaptiveSubspace, RejectsBadArguments) {
  std::mt19937_64 rng(11);
  EXPECT_THROW(AttackAdaptiveSubspace(Vector::Ones(3), Matrix::Ones(3, 2), 1.0, 0.5, 1.0, rng), Error);
  const Matrix basis = Matrix::Identity(3, 2);
  EXPECT_THROW(AttackAdaptiveSubspace(Vector::Ones(3), basis, 1.0, 2.0, 1.0, rng), Error);
  EXPECT_THROW(AttackAdaptiveSubspace(Vector::Ones(3), basis, 1.0, 0.5, -1.0, rng), Error);
}

TEST(AttackAdaptiveSubspace, PassesLocalRoundOneSimulation) {
  ExperimentConfig config;
  config.seed = 3;
  const Federation fed = MakeFederation(config);
  std::mt19937_64 rng(13);
  int passed = 0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    const Matrix honest = HonestGradients(fed, Vector::Zero(static_cast<Eigen::Index>(fed.task.d)), rng);
    const GradientMatrix grads(honest);
    const ProjectionResult p = ProjectGradients(grads);
    Points2 known_points;
    for (std::size_t k : fed.known_benign) known_points.push_back(p.ProjectedPoints()[k]);
    const double eps = SelectRadius(known_points, config.encagg.r).epsilon;
    const Vector ref = honest.colwise().mean().transpose();
    const AdaptiveCrafted c = AttackAdaptiveSubspace(ref, p.basis, eps, 0.5 * eps, 0.0, rng);
    // The crafted gradient replaces the last malicious client's upload.
    Matrix submitted = honest;
    const std::size_t victim = fed.malicious.empty() ? fed.clients.size() - 1 : fed.malicious.back();
    submitted.row(static_cast<Eigen::Index>(victim)) = c.gradient.transpose();
    passed += SimulateRoundOneAcceptance(GradientMatrix(submitted), fed.known_benign, {victim},
                                         config.encagg.min_samples, config.encagg.r, config.encagg.gamma);
  }
  EXPECT_GE(passed, 90);
}

TEST(CraftPoisonedGradients, ColludersShareOneGradientUpToJitter) {
  std::mt19937_64 rng(15);
  const GradientMatrix honest(RandomMatrix(20, 6, rng));
  const IndexSet known{0, 1, 2, 3};
  const IndexSet poisoners{10, 11, 12};
  AttackSpec spec;
  spec.kind = AttackKind::kLie;
  const std::vector<Vector> out = CraftPoisonedGradients(spec, {honest, known, poisoners, 5, 0.2, 3.0}, rng);
  ASSERT_EQ(out.size(), 3u);
  const Vector lie = AttackLie(honest.data(), spec.z);
  for (const Vector& v : out) {
    EXPECT_GT((v - lie).norm(), 0.0);
    EXPECT_LT((v - lie).norm(), 1e-2);
  }
}

TEST(CraftPoisonedGradients, NonColludingSignFlipUsesOwnGradient) {
  std::mt19937_64 rng(17);
  const GradientMatrix honest(RandomMatrix(10, 4, rng));
  AttackSpec spec;
  spec.kind = AttackKind::kSignFlip;
  spec.collusion = false;
  const IndexSet known{0, 1};
  const IndexSet poisoners{7, 8};
  const std::vector<Vector> out = CraftPoisonedGradients(spec, {honest, known, poisoners, 5, 0.2, 3.0}, rng);
  EXPECT_EQ(out[0], AttackSignFlip(honest.row(7), spec.scale));
  EXPECT_EQ(out[1], AttackSignFlip(honest.row(8), spec.scale));
}

TEST(CraftPoisonedGradients, AdaptiveOutputsAreFinite) {
  ExperimentConfig config;
  const Federation fed = MakeFederation(config);
  std::mt19937_64 rng(19);
  const GradientMatrix honest(HonestGradients(fed, Vector::Zero(static_cast<Eigen::Index>(fed.task.d)), rng));
  AttackSpec spec;
  spec.kind = AttackKind::kAdaptiveSubspace;
  const IndexSet poisoners{fed.malicious.empty() ? IndexSet{} : IndexSet{fed.malicious.front()}};
  const std::vector<Vector> out =
      CraftPoisonedGradients(spec, {honest, fed.known_benign, poisoners, 5, 0.2, 3.0}, rng);
  for (const Vector& v : out) EXPECT_TRUE(v.allFinite());
}

TEST(SchedulePoisoning, ZeroRatioNeverPoisons) {
  std::mt19937_64 rng(21);
  const PoisonSchedule s = SchedulePoisoning(20, {4, 5, 6}, 0.0, 50, 1.0, rng);
  for (std::size_t t = 0; t < 50; ++t) EXPECT_TRUE(s.PoisonersAt(t).empty());
}

TEST(SchedulePoisoning, FullRatioIsUnconstrained) {
  std::mt19937_64 rng(23);
  IndexSet all(20);
  for (std::size_t i = 0; i < 20; ++i) all[i] = i;
  const PoisonSchedule s = SchedulePoisoning(20, all, 1.0, 500, 0.5, rng);
  double total = 0.0;
  for (std::size_t t = 0; t < 500; ++t) total += static_cast<double>(s.PoisonersAt(t).size());
  EXPECT_NEAR(total / (500.0 * 20.0), 0.5, 0.02);
}

TEST(SchedulePoisoning, CapHoldsEveryRound) {
  std::mt19937_64 rng(25);
  IndexSet malicious;
  for (std::size_t i = 4; i < 16; ++i) malicious.push_back(i);
  const PoisonSchedule s = SchedulePoisoning(20, malicious, 0.6, 1000, 0.5, rng);
  double total = 0.0;
  for (std::size_t t = 0; t < 1000; ++t) {
    const IndexSet p = s.PoisonersAt(t);
    EXPECT_LE(p.size(), 12u);
    total += static_cast<double>(p.size()) / 20.0;
  }
  const double mean = total / 1000.0;
  EXPECT_GE(mean, 0.25);
  EXPECT_LE(mean, 0.6);
}

TEST(SchedulePoisoning, TightCapIsRedrawn) {
  std::mt19937_64 rng(27);
  IndexSet malicious;
  for (std::size_t i = 0; i < 12; ++i) malicious.push_back(i);
  const PoisonSchedule s = SchedulePoisoning(20, malicious, 0.2, 300, 0.5, rng);
  for (std::size_t t = 0; t < 300; ++t) EXPECT_LE(s.PoisonersAt(t).size(), 4u);
}

TEST(SchedulePoisoning, ReproducibleFromSeed) {
  std::mt19937_64 a(29), b(29);
  const PoisonSchedule x = SchedulePoisoning(20, {1, 2, 3, 9}, 0.2, 100, 0.5, a);
  const PoisonSchedule y = SchedulePoisoning(20, {1, 2, 3, 9}, 0.2, 100, 0.5, b);
  EXPECT_EQ(x.per_round_flags, y.per_round_flags);
}

TEST(AttackKind, NamesRoundTrip) {
  for (AttackKind k : {AttackKind::kNone, AttackKind::kGaussian, AttackKind::kSignFlip, AttackKind::kScale,
                       AttackKind::kLie, AttackKind::kMinMax, AttackKind::kAdaptiveSubspace}) {
    EXPECT_EQ(ParseAttackKind(AttackKindName(k)), k);
  }
  EXPECT_FALSE(ParseAttackKind("bogus").has_value());
}

}  // namespace
}  // namespace encagg
