#include "verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "encagg/generator.hpp"
#include "encagg/projection.hpp"
#include "oracles.hpp"

namespace encagg::verify {
namespace {

Points2 RandomInstance(std::mt19937_64& rng, std::size_t max_points) {
  std::uniform_int_distribution<std::size_t> count(1, max_points);
  std::uniform_int_distribution<int> blobs(1, 4);
  std::uniform_real_distribution<double> centre(-10.0, 10.0);
  std::uniform_real_distribution<double> spread(0.2, 2.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t m = count(rng);
  const int b = blobs(rng);
  std::vector<Point2> centres;
  std::vector<double> spreads;
  for (int i = 0; i < b; ++i) {
    centres.emplace_back(centre(rng), centre(rng));
    spreads.push_back(spread(rng));
  }
  Points2 points;
  std::uniform_int_distribution<int> which(0, b - 1);
  for (std::size_t i = 0; i < m; ++i) {
    const int c = which(rng);
    points.push_back(centres[static_cast<std::size_t>(c)] + spreads[static_cast<std::size_t>(c)] * Point2(normal(rng), normal(rng)));
  }
  return points;
}

}  // namespace

double RelativeError(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

CheckResult CheckDbscanOracle(const Hooks& hooks, std::size_t instances, std::uint64_t seed) {
  CheckResult r{"dbscan matches density-reachability oracle", true, ""};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> eps(0.3, 3.0);
  std::uniform_int_distribution<std::size_t> min_samples(1, 6);
  for (std::size_t t = 0; t < instances; ++t) {
    const Points2 points = RandomInstance(rng, 50);
    const double e = eps(rng);
    const std::size_t ms = min_samples(rng);
    const auto got = oracle::PartitionFromLabels(hooks.dbscan(points, e, ms).labels);
    const auto want = oracle::BruteForceDbscan(points, e, ms);
    if (!(got == want)) {
      r.passed = false;
      r.detail = "instance " + std::to_string(t) + " differs";
      return r;
    }
  }
  r.detail = std::to_string(instances) + " instances";
  return r;
}

CheckResult CheckProjectionOracle(std::size_t instances, std::uint64_t seed) {
  CheckResult r{"projection matches Jacobi eigensolver", true, ""};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> rows(3, 20);
  std::uniform_int_distribution<int> cols(2, 12);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (std::size_t t = 0; t < instances; ++t) {
    const int n = rows(rng);
    const int d = cols(rng);
    Matrix data(n, d);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) data(i, j) = normal(rng) * (1.0 + 0.5 * j);
    }
    const ProjectionResult got = ProjectGradients(GradientMatrix(data));
    const oracle::EigenDecomposition want = oracle::JacobiEigen(oracle::SampleCovariance(data));
    for (int c = 0; c < 2; ++c) {
      worst = std::max(worst, std::abs(got.eigenvalues(c) - want.values(c)));
      const Vector a = got.basis.col(c);
      const Vector b = want.vectors.col(c);
      worst = std::max(worst, std::min((a - b).cwiseAbs().maxCoeff(), (a + b).cwiseAbs().maxCoeff()));
      const double var = got.projected.col(c).squaredNorm() / static_cast<double>(n - 1);
      worst = std::max(worst, std::abs(var - got.eigenvalues(c)));
    }
  }
  r.passed = worst <= 1e-8;
  std::ostringstream os;
  os << instances << " matrices, worst deviation " << worst;
  r.detail = os.str();
  return r;
}

CheckResult CheckGeneratorGradients(std::size_t models, std::uint64_t seed) {
  CheckResult r{"generator backprop matches finite differences", true, ""};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  double worst = 0.0;
  for (std::size_t t = 0; t < models; ++t) {
    GeneratorModel model = GeneratorModel::Random(3, 4, rng);
    Vector params = model.Parameters();
    for (Eigen::Index i = 0; i < params.size(); ++i) params(i) += 0.3 * normal(rng);
    model.SetParameters(params);
    model.output_center = Point2(normal(rng), normal(rng));
    model.output_scale = 1.0 + std::abs(normal(rng));
    const Matrix noise = SampleNoise(6, 3, rng);
    std::vector<int> labels(6);
    for (auto& l : labels) l = coin(rng) ? 1 : 0;
    const Point2 centre(normal(rng), normal(rng));
    GeneratorHyper hyper;
    hyper.tau = 0.8;
    hyper.rho = 0.9;
    const double epsilon = 1.0;

    const Vector analytic = EvaluateGenerator(model, noise, labels, centre, epsilon, hyper).gradient;
    const Vector numeric = oracle::FiniteDifferenceGradient(
        [&](const Vector& p) {
          GeneratorModel probe = model;
          probe.SetParameters(p);
          return EvaluateGenerator(probe, noise, labels, centre, epsilon, hyper).report.l_total;
        },
        params);
    for (Eigen::Index i = 0; i < analytic.size(); ++i) worst = std::max(worst, RelativeError(analytic(i), numeric(i)));
  }
  r.passed = worst <= 1e-4;
  std::ostringstream os;
  os << models << " models, worst relative error " << worst;
  r.detail = os.str();
  return r;
}

CheckResult CheckRadiusSelection() {
  CheckResult r{"radius selection rank arithmetic", true, ""};
  // Marks 0, 1, 4, 6 have pairwise distances exactly {1,2,3,4,5,6}.
  const Points2 known{{0, 0}, {1, 0}, {4, 0}, {6, 0}};
  const RadiusSelection half = SelectRadius(known, 0.5);
  r.passed = half.epsilon == 3.0 && half.sorted_distances.size() == 6;
  r.detail = "epsilon at r=0.5 is " + std::to_string(half.epsilon);
  return r;
}

bool RunVerification(const Hooks& hooks, std::ostream& out) {
  std::vector<CheckResult> results{CheckDbscanOracle(hooks, 200, 20261018), CheckProjectionOracle(100, 7),
                                   CheckGeneratorGradients(10, 11), CheckRadiusSelection()};
  bool ok = true;
  for (const auto& r : results) {
    out << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << " (" << r.detail << ")\n";
    ok = ok && r.passed;
  }
  return ok;
}

}  // namespace encagg::verify
