#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace encagg::oracle {

EigenDecomposition JacobiEigen(const Matrix& symmetric, double tolerance, int max_sweeps) {
  const Eigen::Index m = symmetric.rows();
  Matrix a = symmetric;
  Matrix v = Matrix::Identity(m, m);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < m; ++p) {
      for (Eigen::Index q = p + 1; q < m; ++q) off += a(p, q) * a(p, q);
    }
    if (std::sqrt(off) <= tolerance * std::max(1.0, a.norm())) break;
    for (Eigen::Index p = 0; p < m; ++p) {
      for (Eigen::Index q = p + 1; q < m; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < m; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < m; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < m; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });
  EigenDecomposition out;
  out.values.resize(m);
  out.vectors.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    out.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return out;
}

Matrix SampleCovariance(const Matrix& rows) {
  const Eigen::Index n = rows.rows();
  Matrix cov = Matrix::Zero(rows.cols(), rows.cols());
  Vector mean = Vector::Zero(rows.cols());
  for (Eigen::Index i = 0; i < n; ++i) mean += rows.row(i).transpose();
  mean /= static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector c = rows.row(i).transpose() - mean;
    cov += c * c.transpose();
  }
  return cov / static_cast<double>(n - 1);
}

Partition BruteForceDbscan(const Points2& points, double epsilon, std::size_t min_samples) {
  const std::size_t m = points.size();
  std::vector<std::vector<char>> near(m, std::vector<char>(m, 0));
  std::vector<char> core(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t count = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const double dx = points[i].x() - points[j].x();
      const double dy = points[i].y() - points[j].y();
      near[i][j] = std::sqrt(dx * dx + dy * dy) <= epsilon ? 1 : 0;
      count += near[i][j];
    }
    core[i] = count >= min_samples ? 1 : 0;
  }
  // reach[i][j]: core i and core j are density-connected (Warshall closure).
  std::vector<std::vector<char>> reach(m, std::vector<char>(m, 0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) reach[i][j] = core[i] && core[j] && near[i][j];
  }
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < m; ++i) {
      if (!reach[i][k]) continue;
      for (std::size_t j = 0; j < m; ++j) {
        if (reach[k][j]) reach[i][j] = 1;
      }
    }
  }
  // Component representative: lowest-index core it reaches.
  std::vector<long> rep(m, -1);
  for (std::size_t i = 0; i < m; ++i) {
    if (!core[i]) continue;
    for (std::size_t j = 0; j < m; ++j) {
      if (reach[i][j]) {
        rep[i] = static_cast<long>(j);
        break;
      }
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (core[i]) continue;
    for (std::size_t j = 0; j < m; ++j) {
      if (core[j] && near[i][j]) {
        rep[i] = rep[j];
        break;
      }
    }
  }
  std::vector<int> labels(m, -1);
  for (std::size_t i = 0; i < m; ++i) labels[i] = static_cast<int>(rep[i]);
  return PartitionFromLabels(labels);
}

Partition PartitionFromLabels(const std::vector<int>& labels) {
  Partition p;
  std::vector<std::pair<int, std::vector<std::size_t>>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      p.noise.push_back(i);
      continue;
    }
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == labels[i]; });
    if (it == groups.end()) {
      groups.push_back({labels[i], {i}});
    } else {
      it->second.push_back(i);
    }
  }
  for (auto& g : groups) p.clusters.push_back(std::move(g.second));
  std::sort(p.clusters.begin(), p.clusters.end());
  return p;
}

Vector FiniteDifferenceGradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double plus = f(probe);
    probe(i) = x(i) - h;
    const double minus = f(probe);
    probe(i) = x(i);
    g(i) = (plus - minus) / (2.0 * h);
  }
  return g;
}

}  // namespace encagg::oracle
