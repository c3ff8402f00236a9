#include "encagg/types.hpp"

#include <algorithm>
#include <iterator>
#include <unordered_set>

#include "encagg/error.hpp"

namespace encagg {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kDegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::kInconsistentLabels: return "InconsistentLabels";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kEmptySelection: return "EmptySelection";
    case ErrorCode::kSearchFailed: return "SearchFailed";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

IndexSet MakeIndexSet(std::vector<std::size_t> indices) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  return indices;
}

IndexSet SetUnion(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

IndexSet SetIntersection(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

IndexSet SetDifference(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool Contains(const IndexSet& set, std::size_t index) {
  return std::binary_search(set.begin(), set.end(), index);
}

bool AllFinite(const Matrix& m) { return m.allFinite(); }
bool AllFinite(const Vector& v) { return v.allFinite(); }

namespace {

std::vector<std::string> DefaultIds(Eigen::Index n) {
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  return ids;
}

}  // namespace

GradientMatrix::GradientMatrix(Matrix data)
    : GradientMatrix(std::move(data), {}) {}

GradientMatrix::GradientMatrix(Matrix data, std::vector<std::string> client_ids)
    : data_(std::move(data)), client_ids_(std::move(client_ids)) {
  if (data_.rows() < 1) throw Error(ErrorCode::kInvalidInput, "gradient matrix needs at least one row");
  if (data_.cols() < 2) throw Error(ErrorCode::kInvalidInput, "gradient dimension must be at least 2");
  if (!data_.allFinite()) throw Error(ErrorCode::kInvalidInput, "gradient matrix has non-finite entries");
  if (client_ids_.empty()) client_ids_ = DefaultIds(data_.rows());
  if (client_ids_.size() != rows()) {
    throw Error(ErrorCode::kInvalidInput, "client id count does not match gradient rows");
  }
  std::unordered_set<std::string> seen(client_ids_.begin(), client_ids_.end());
  if (seen.size() != client_ids_.size()) {
    throw Error(ErrorCode::kInvalidInput, "client ids must be unique");
  }
}

GradientMatrix GradientMatrix::Select(const IndexSet& indices) const {
  Matrix out(static_cast<Eigen::Index>(indices.size()), data_.cols());
  std::vector<std::string> ids;
  ids.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= rows()) throw Error(ErrorCode::kInvalidInput, "row index out of range");
    out.row(static_cast<Eigen::Index>(r)) = data_.row(static_cast<Eigen::Index>(indices[r]));
    ids.push_back(client_ids_[indices[r]]);
  }
  return GradientMatrix(std::move(out), std::move(ids));
}

}  // namespace encagg
