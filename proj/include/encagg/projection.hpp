#pragma once

#include <utility>

#include "encagg/types.hpp"

namespace encagg {

// Top-2 principal subspace of a gradient matrix.
struct ProjectionResult {
  Matrix basis;             // d x 2, orthonormal columns
  Eigen::Vector2d eigenvalues = Eigen::Vector2d::Zero();  // descending, >= 0
  Matrix projected;         // n x 2
  Vector mean;              // length d

  // Maps any length-d vector into the same 2D coordinates as `projected`.
  Point2 Project(const Vector& gradient) const;
  Points2 ProjectedPoints() const;
};

// Centers by the column mean and projects onto the two leading eigenvectors of
// the sample covariance (divisor n-1). Uses the n x n Gram matrix when n < d.
// Each basis column is sign-canonicalized so its largest-magnitude entry is
// positive (lowest index wins ties).
//
// Throws kInvalidInput for n < 2 and kDegenerateCovariance when every row is
// identical; the pipeline maps the latter to all-zero 2D points.
ProjectionResult ProjectGradients(const GradientMatrix& grads);

// (lambda1 + lambda2) / trace(covariance).
double VarianceCaptured(const ProjectionResult& result, const GradientMatrix& grads);

struct SubspaceSplit {
  Vector in_plane;
  Vector orthogonal;
};

SubspaceSplit DecomposeAgainstSubspace(const Vector& v, const Matrix& basis);

// Max-abs deviation of basis^T basis from the identity.
double OrthonormalityError(const Matrix& basis);

namespace detail {

struct Eigenpair {
  double value = 0.0;
  Vector vector;
};

// Leading two eigenpairs of a symmetric positive semi-definite matrix by power
// iteration with deflation. Vectors of (numerically) zero eigenvalues come back
// empty.
std::pair<Eigenpair, Eigenpair> PowerIterationTop2(const Matrix& symmetric,
                                                   double tolerance = 1e-12,
                                                   int max_iterations = 10000);

void CanonicalizeSign(Vector& v);

}  // namespace detail
}  // namespace encagg
