#include "encagg/projection.hpp"

#include <algorithm>
#include <cmath>

#include "encagg/error.hpp"

namespace encagg {
namespace detail {
namespace {

Vector StartVector(const Matrix& a) {
  const Eigen::Index m = a.rows();
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < m; ++j) {
    if (a(j, j) > a(best, best)) best = j;
  }
  Vector v = a.col(best);
  const double scale = std::max(v.norm(), 1.0);
  // Small fixed perturbation so the start is never exactly orthogonal to the
  // leading eigenvector.
  for (Eigen::Index i = 0; i < m; ++i) {
    v(i) += 1e-2 * scale * std::cos(0.7 * static_cast<double>(i) + 0.3) /
            std::sqrt(static_cast<double>(m));
  }
  return v.normalized();
}

// Returns an empty vector when the (deflated) operator annihilates the iterate.
Vector PowerIterate(const Matrix& op, const Vector* previous, double tolerance,
                    int max_iterations) {
  Vector v = StartVector(op);
  if (previous != nullptr) {
    v -= previous->dot(v) * *previous;
    if (v.norm() == 0.0) return {};
    v.normalize();
  }
  const double op_scale = std::max(op.cwiseAbs().maxCoeff(), 1e-300);
  for (int it = 0; it < max_iterations; ++it) {
    Vector w = op * v;
    if (previous != nullptr) w -= previous->dot(w) * *previous;
    const double norm = w.norm();
    if (norm <= 1e-13 * op_scale) return {};
    w /= norm;
    const double diff = (w - v).norm();
    v = std::move(w);
    if (diff < tolerance) break;
  }
  return v;
}

}  // namespace

void CanonicalizeSign(Vector& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  }
  if (v.size() > 0 && v(best) < 0) v = -v;
}

std::pair<Eigenpair, Eigenpair> PowerIterationTop2(const Matrix& symmetric,
                                                   double tolerance,
                                                   int max_iterations) {
  Eigenpair first;
  Eigenpair second;
  first.vector = PowerIterate(symmetric, nullptr, tolerance, max_iterations);
  if (first.vector.size() == 0) return {first, second};
  first.value = std::max(0.0, first.vector.dot(symmetric * first.vector));

  Matrix deflated = symmetric - first.value * first.vector * first.vector.transpose();
  second.vector = PowerIterate(deflated, &first.vector, tolerance, max_iterations);
  if (second.vector.size() != 0) {
    second.value = std::max(0.0, second.vector.dot(symmetric * second.vector));
  }
  return {first, second};
}

}  // namespace detail

namespace {

// Unit vector orthogonal to `v`, built from the coordinate axis v is least
// aligned with.
Vector OrthogonalComplementVector(const Vector& v) {
  Eigen::Index axis = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v(i)) < std::abs(v(axis))) axis = i;
  }
  Vector e = Vector::Zero(v.size());
  e(axis) = 1.0;
  e -= v.dot(e) * v;
  return e.normalized();
}

}  // namespace

Point2 ProjectionResult::Project(const Vector& gradient) const {
  return basis.transpose() * (gradient - mean);
}

Points2 ProjectionResult::ProjectedPoints() const {
  Points2 out;
  out.reserve(static_cast<std::size_t>(projected.rows()));
  for (Eigen::Index i = 0; i < projected.rows(); ++i) out.emplace_back(projected(i, 0), projected(i, 1));
  return out;
}

ProjectionResult ProjectGradients(const GradientMatrix& grads) {
  const auto n = static_cast<Eigen::Index>(grads.rows());
  const auto d = static_cast<Eigen::Index>(grads.cols());
  if (n < 2) throw Error(ErrorCode::kInvalidInput, "projection needs at least two gradients");
  if (!grads.data().allFinite()) throw Error(ErrorCode::kInvalidInput, "non-finite gradient entries");

  ProjectionResult result;
  result.mean = grads.data().colwise().mean().transpose();
  const Matrix centered = grads.data().rowwise() - result.mean.transpose();

  const double magnitude = std::max(1.0, grads.data().cwiseAbs().maxCoeff());
  if (centered.cwiseAbs().maxCoeff() <= 1e-14 * magnitude) {
    throw Error(ErrorCode::kDegenerateCovariance, "all gradients are identical");
  }

  const double denom = static_cast<double>(n - 1);
  Vector v1;
  Vector v2;
  if (n < d) {
    const Matrix gram = centered * centered.transpose() / denom;
    auto [e1, e2] = detail::PowerIterationTop2(gram);
    if (e1.vector.size() == 0) {
      throw Error(ErrorCode::kDegenerateCovariance, "covariance has rank 0");
    }
    v1 = (centered.transpose() * e1.vector).normalized();
    if (e2.vector.size() != 0) {
      v2 = centered.transpose() * e2.vector;
      v2 -= v1.dot(v2) * v1;
      if (v2.norm() > 0) v2.normalize();
    }
  } else {
    const Matrix cov = centered.transpose() * centered / denom;
    auto [e1, e2] = detail::PowerIterationTop2(cov);
    if (e1.vector.size() == 0) {
      throw Error(ErrorCode::kDegenerateCovariance, "covariance has rank 0");
    }
    v1 = e1.vector;
    if (e2.vector.size() != 0) {
      v2 = e2.vector - v1.dot(e2.vector) * v1;
      v2.normalize();
    }
  }
  if (v2.size() == 0 || v2.norm() == 0.0) v2 = OrthogonalComplementVector(v1);

  detail::CanonicalizeSign(v1);
  detail::CanonicalizeSign(v2);

  result.basis.resize(d, 2);
  result.basis.col(0) = v1;
  result.basis.col(1) = v2;
  result.projected = centered * result.basis;
  // Rayleigh quotients on the final basis, so the projected column variances
  // equal the reported eigenvalues.
  double l1 = result.projected.col(0).squaredNorm() / denom;
  double l2 = result.projected.col(1).squaredNorm() / denom;
  if (l2 > l1) l2 = l1;
  result.eigenvalues = Eigen::Vector2d(l1, l2);
  return result;
}

double VarianceCaptured(const ProjectionResult& result, const GradientMatrix& grads) {
  const Matrix centered = grads.data().rowwise() - result.mean.transpose();
  const double total = centered.squaredNorm() / static_cast<double>(grads.rows() - 1);
  if (!(total > 0.0)) throw Error(ErrorCode::kInvalidInput, "total variance is zero");
  return std::clamp((result.eigenvalues(0) + result.eigenvalues(1)) / total, 0.0, 1.0);
}

double OrthonormalityError(const Matrix& basis) {
  const Matrix gram = basis.transpose() * basis;
  return (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

SubspaceSplit DecomposeAgainstSubspace(const Vector& v, const Matrix& basis) {
  if (basis.rows() != v.size()) throw Error(ErrorCode::kInvalidInput, "basis/vector dimension mismatch");
  if (OrthonormalityError(basis) > 1e-8) {
    throw Error(ErrorCode::kInvalidInput, "basis columns are not orthonormal");
  }
  SubspaceSplit split;
  split.orthogonal = v - basis * (basis.transpose() * v);
  // Second pass removes the rounding residue left by the first.
  split.orthogonal -= basis * (basis.transpose() * split.orthogonal);
  split.in_plane = v - split.orthogonal;
  return split;
}

}  // namespace encagg
