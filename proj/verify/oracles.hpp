#pragma once

// Reference implementations used to cross-check the library. They share no
// code with the production paths they check.

#include <cstddef>
#include <functional>
#include <vector>

#include "encagg/types.hpp"

namespace encagg::oracle {

struct EigenDecomposition {
  Vector values;   // descending
  Matrix vectors;  // columns match values
};

// Cyclic Jacobi rotations on a symmetric matrix.
EigenDecomposition JacobiEigen(const Matrix& symmetric, double tolerance = 1e-15, int max_sweeps = 100);

// Sample covariance (divisor n-1) of the rows.
Matrix SampleCovariance(const Matrix& rows);

// Clusters as sorted member lists ordered by first member, plus sorted noise.
struct Partition {
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<std::size_t> noise;
  bool operator==(const Partition&) const = default;
};

// Density reachability by transitive closure of the core-point adjacency
// matrix; borders go to the component of their lowest-index core neighbour.
Partition BruteForceDbscan(const Points2& points, double epsilon, std::size_t min_samples);

Partition PartitionFromLabels(const std::vector<int>& labels);

// Central differences of f at x.
Vector FiniteDifferenceGradient(const std::function<double(const Vector&)>& f, const Vector& x,
                                double h = 1e-5);

}  // namespace encagg::oracle
