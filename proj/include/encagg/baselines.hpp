#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "encagg/types.hpp"

namespace encagg {

enum class AggregatorKind { kEnCAgg, kMean, kKrum, kMedian, kTrimmedMean, kFlTrust };

const char* AggregatorKindName(AggregatorKind kind);
std::optional<AggregatorKind> ParseAggregatorKind(const std::string& name);

struct KrumResult {
  Vector gradient;
  std::size_t selected = 0;
  std::vector<double> scores;
  // n - f - 2 < 1, so a single neighbour was used.
  bool degenerate_neighbourhood = false;
};

// Row with the smallest sum of squared distances to its n - f - 2 nearest
// neighbours (at least one). Lowest index wins ties.
KrumResult AggKrum(const GradientMatrix& grads, std::size_t f);

// Coordinate-wise median; even counts average the two central values.
Vector AggMedian(const GradientMatrix& grads);

// Drops floor(trim_fraction * n) values from each end of every coordinate.
Vector AggTrimmedMean(const GradientMatrix& grads, double trim_fraction);

// ReLU(cosine) trust scores against the server gradient, client gradients
// rescaled to the server gradient's norm. All-zero scores return the server
// gradient.
Vector AggFlTrust(const GradientMatrix& grads, const Vector& server_gradient);

}  // namespace encagg
