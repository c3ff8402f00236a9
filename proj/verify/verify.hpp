#pragma once

#include <cstddef>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "encagg/clustering.hpp"

namespace encagg::verify {

// Seams the checks call through, so a deliberately broken component can be
// swapped in to confirm the suite notices.
struct Hooks {
  std::function<ClusteringResult(const Points2&, double, std::size_t)> dbscan = Dbscan;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

CheckResult CheckDbscanOracle(const Hooks& hooks, std::size_t instances, std::uint64_t seed);
CheckResult CheckProjectionOracle(std::size_t instances, std::uint64_t seed);
CheckResult CheckGeneratorGradients(std::size_t models, std::uint64_t seed);
CheckResult CheckRadiusSelection();

// Runs every check, prints one PASS/FAIL line each, returns true if all pass.
bool RunVerification(const Hooks& hooks, std::ostream& out);

// |a - b| / max(|a|, |b|, floor).
double RelativeError(double a, double b, double floor = 1e-6);

}  // namespace encagg::verify
