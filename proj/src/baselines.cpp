#include "encagg/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "encagg/error.hpp"

namespace encagg {

const char* AggregatorKindName(AggregatorKind kind) {
  switch (kind) {
    case AggregatorKind::kEnCAgg: return "encagg";
    case AggregatorKind::kMean: return "mean";
    case AggregatorKind::kKrum: return "krum";
    case AggregatorKind::kMedian: return "median";
    case AggregatorKind::kTrimmedMean: return "trimmed_mean";
    case AggregatorKind::kFlTrust: return "fltrust";
  }
  return "mean";
}

std::optional<AggregatorKind> ParseAggregatorKind(const std::string& name) {
  for (AggregatorKind k : {AggregatorKind::kEnCAgg, AggregatorKind::kMean, AggregatorKind::kKrum,
                           AggregatorKind::kMedian, AggregatorKind::kTrimmedMean,
                           AggregatorKind::kFlTrust}) {
    if (name == AggregatorKindName(k)) return k;
  }
  return std::nullopt;
}

KrumResult AggKrum(const GradientMatrix& grads, std::size_t f) {
  const std::size_t n = grads.rows();
  if (n < 2) throw Error(ErrorCode::kInvalidInput, "Krum needs at least two gradients");
  const Matrix& g = grads.data();

  KrumResult out;
  std::size_t neighbours = 1;
  if (n > f + 2 && n - f - 2 >= 1) {
    neighbours = n - f - 2;
  } else {
    out.degenerate_neighbourhood = true;
  }
  neighbours = std::min(neighbours, n - 1);

  out.scores.resize(n);
  std::vector<double> dist;
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dist.push_back((g.row(static_cast<Eigen::Index>(i)) - g.row(static_cast<Eigen::Index>(j))).squaredNorm());
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(neighbours), dist.end());
    double score = 0.0;
    for (std::size_t k = 0; k < neighbours; ++k) score += dist[k];
    out.scores[i] = score;
  }
  out.selected = static_cast<std::size_t>(std::min_element(out.scores.begin(), out.scores.end()) - out.scores.begin());
  out.gradient = grads.row(out.selected);
  return out;
}

Vector AggMedian(const GradientMatrix& grads) {
  const Matrix& g = grads.data();
  const Eigen::Index n = g.rows();
  Vector out(g.cols());
  std::vector<double> column(static_cast<std::size_t>(n));
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    for (Eigen::Index r = 0; r < n; ++r) column[static_cast<std::size_t>(r)] = g(r, c);
    std::sort(column.begin(), column.end());
    const auto mid = static_cast<std::size_t>(n / 2);
    out(c) = n % 2 == 1 ? column[mid] : 0.5 * (column[mid - 1] + column[mid]);
  }
  return out;
}

Vector AggTrimmedMean(const GradientMatrix& grads, double trim_fraction) {
  if (!(trim_fraction >= 0.0 && trim_fraction < 0.5)) {
    throw Error(ErrorCode::kInvalidInput, "trim_fraction must be in [0, 0.5)");
  }
  const Matrix& g = grads.data();
  const auto n = static_cast<std::size_t>(g.rows());
  const auto beta = static_cast<std::size_t>(std::floor(trim_fraction * static_cast<double>(n)));
  if (2 * beta >= n) throw Error(ErrorCode::kInvalidInput, "trimming would remove every value");
  Vector out(g.cols());
  std::vector<double> column(n);
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    for (std::size_t r = 0; r < n; ++r) column[r] = g(static_cast<Eigen::Index>(r), c);
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (std::size_t r = beta; r < n - beta; ++r) sum += column[r];
    out(c) = sum / static_cast<double>(n - 2 * beta);
  }
  return out;
}

Vector AggFlTrust(const GradientMatrix& grads, const Vector& server_gradient) {
  if (server_gradient.size() != static_cast<Eigen::Index>(grads.cols())) {
    throw Error(ErrorCode::kInvalidInput, "server gradient has the wrong dimension");
  }
  const double server_norm = server_gradient.norm();
  if (!(server_norm > 0.0)) throw Error(ErrorCode::kInvalidInput, "server gradient must be non-zero");

  Vector sum = Vector::Zero(server_gradient.size());
  double total_trust = 0.0;
  for (std::size_t i = 0; i < grads.rows(); ++i) {
    const Vector g = grads.row(i);
    const double norm = g.norm();
    if (norm == 0.0) continue;
    const double trust = std::max(0.0, g.dot(server_gradient) / (norm * server_norm));
    if (trust == 0.0) continue;
    sum += trust * (server_norm / norm) * g;
    total_trust += trust;
  }
  if (total_trust == 0.0) return server_gradient;
  return sum / total_trust;
}

}  // namespace encagg
