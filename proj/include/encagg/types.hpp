#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace encagg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Point2 = Eigen::Vector2d;
using Points2 = std::vector<Point2>;

// Sorted, duplicate-free list of row indices into a GradientMatrix.
using IndexSet = std::vector<std::size_t>;

IndexSet MakeIndexSet(std::vector<std::size_t> indices);
IndexSet SetUnion(const IndexSet& a, const IndexSet& b);
IndexSet SetIntersection(const IndexSet& a, const IndexSet& b);
IndexSet SetDifference(const IndexSet& a, const IndexSet& b);
bool Contains(const IndexSet& set, std::size_t index);

// n client gradients of dimension d, one per row.
class GradientMatrix {
 public:
  GradientMatrix() = default;
  // Client ids default to "0".."n-1".
  explicit GradientMatrix(Matrix data);
  GradientMatrix(Matrix data, std::vector<std::string> client_ids);

  std::size_t rows() const { return static_cast<std::size_t>(data_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(data_.cols()); }
  const Matrix& data() const { return data_; }
  Vector row(std::size_t i) const { return data_.row(static_cast<Eigen::Index>(i)).transpose(); }
  const std::vector<std::string>& client_ids() const { return client_ids_; }

  // Rows listed in `indices`, in that order.
  GradientMatrix Select(const IndexSet& indices) const;

 private:
  Matrix data_;
  std::vector<std::string> client_ids_;
};

bool AllFinite(const Matrix& m);
bool AllFinite(const Vector& v);

}  // namespace encagg
