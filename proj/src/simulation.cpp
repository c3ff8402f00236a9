#include "encagg/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "encagg/error.hpp"

namespace encagg {
namespace {

void Require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::kConfigError, message);
}

double Sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

Vector RandomNormal(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
  return v;
}

Shard DrawSamples(const SyntheticTask& task, const Vector& shift, std::size_t count,
                  std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Shard s;
  s.x.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(task.d));
  s.y.resize(static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.x.cols(); ++j) s.x(i, j) = shift(j) + normal(rng);
    const double signal = s.x.row(i).dot(task.true_weights) + task.noise_std * normal(rng);
    s.y(i) = task.kind == TaskKind::kLogisticClassification ? (signal > 0.0 ? 1.0 : 0.0) : signal;
  }
  return s;
}

Shard Concat(const std::vector<Shard>& parts) {
  Eigen::Index rows = 0;
  for (const auto& p : parts) rows += p.x.rows();
  Shard out;
  out.x.resize(rows, parts.front().x.cols());
  out.y.resize(rows);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.x.middleRows(r, p.x.rows()) = p.x;
    out.y.segment(r, p.y.size()) = p.y;
    r += p.x.rows();
  }
  return out;
}

std::vector<std::size_t> DrawDistinct(std::vector<std::size_t> pool, std::size_t count,
                                      std::mt19937_64& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace

const char* TaskKindName(TaskKind kind) {
  return kind == TaskKind::kLinearRegression ? "linear_regression" : "logistic_classification";
}

std::optional<TaskKind> ParseTaskKind(const std::string& name) {
  if (name == "linear_regression") return TaskKind::kLinearRegression;
  if (name == "logistic_classification") return TaskKind::kLogisticClassification;
  return std::nullopt;
}

std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::size_t ExperimentConfig::MaliciousCount() const {
  return static_cast<std::size_t>(std::floor(malicious_ratio * static_cast<double>(n) + 1e-9));
}

void ExperimentConfig::Validate() const {
  Require(n >= 2, "n must be >= 2");
  Require(k >= 2 && 2 * k <= n, "k must satisfy 2 <= k <= n/2");
  Require(malicious_ratio >= 0.0 && malicious_ratio <= 1.0, "malicious_ratio must be in [0,1]");
  Require(MaliciousCount() + k <= n, "malicious_ratio leaves no room for the known benign clients");
  Require(rounds >= 1, "rounds must be >= 1");
  Require(learning_rate > 0.0, "learning_rate must be > 0");
  Require(batch_size >= 1, "batch_size must be >= 1");
  Require(poison_probability >= 0.0 && poison_probability <= 1.0, "poison_probability must be in [0,1]");
  Require(trim_fraction >= 0.0 && trim_fraction < 0.5, "trim_fraction must be in [0,0.5)");
  Require(2 * static_cast<std::size_t>(std::floor(trim_fraction * static_cast<double>(n))) < n,
          "trim_fraction removes every client");
  Require(krum_f >= -1, "krum_f must be >= 0 (or -1 for the malicious count)");
  Require(task.dim >= 2, "task.dim must be >= 2");
  Require(task.noise_std >= 0.0, "task.noise_std must be >= 0");
  Require(task.heterogeneity >= 0.0, "task.heterogeneity must be >= 0");
  Require(task.weight_norm > 0.0, "task.weight_norm must be > 0");
  Require(task.samples_per_client >= 5, "task.samples_per_client must be >= 5");
  Require(task.root_samples >= 1, "task.root_samples must be >= 1");
  encagg.Validate();
  attack.Validate();
}

Federation MakeFederation(const ExperimentConfig& config) {
  config.Validate();
  std::mt19937_64 rng(DeriveSeed(config.seed, 0x5eed));

  Federation fed;
  fed.task.kind = config.task.kind;
  fed.task.d = config.task.dim;
  fed.task.noise_std = config.task.noise_std;
  fed.task.heterogeneity = config.task.heterogeneity;
  fed.task.true_weights = RandomNormal(config.task.dim, rng).normalized() * config.task.weight_norm;

  std::vector<std::size_t> all(config.n);
  std::iota(all.begin(), all.end(), 0);
  fed.known_benign = MakeIndexSet(DrawDistinct(all, config.k, rng));
  fed.malicious = MakeIndexSet(DrawDistinct(SetDifference(all, fed.known_benign), config.MaliciousCount(), rng));

  const std::size_t held = config.task.samples_per_client / 5;
  std::vector<Shard> holdout_parts;
  for (std::size_t i = 0; i < config.n; ++i) {
    ClientState c;
    c.id = i;
    c.role = Contains(fed.known_benign, i) ? ClientRole::kKnownBenign
             : Contains(fed.malicious, i)  ? ClientRole::kMalicious
                                           : ClientRole::kBenign;
    c.input_shift = config.task.heterogeneity > 0.0
                        ? Vector(RandomNormal(config.task.dim, rng).normalized() * config.task.heterogeneity)
                        : Vector(Vector::Zero(static_cast<Eigen::Index>(config.task.dim)));
    Shard all_samples = DrawSamples(fed.task, c.input_shift, config.task.samples_per_client, rng);
    const auto keep = static_cast<Eigen::Index>(config.task.samples_per_client - held);
    c.shard.x = all_samples.x.topRows(keep);
    c.shard.y = all_samples.y.head(keep);
    if (held > 0) {
      holdout_parts.push_back({all_samples.x.bottomRows(static_cast<Eigen::Index>(held)),
                               all_samples.y.tail(static_cast<Eigen::Index>(held))});
    }
    fed.clients.push_back(std::move(c));
  }
  fed.holdout = Concat(holdout_parts);
  fed.root = DrawSamples(fed.task, Vector::Zero(static_cast<Eigen::Index>(config.task.dim)),
                         config.task.root_samples, rng);
  return fed;
}

double TaskLoss(TaskKind kind, const Matrix& x, const Vector& y, const Vector& weights) {
  const Vector z = x * weights;
  const double n = static_cast<double>(x.rows());
  if (kind == TaskKind::kLinearRegression) return 0.5 * (z - y).squaredNorm() / n;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    // log(1 + e^z) - y z, evaluated stably.
    const double softplus = z(i) > 0 ? z(i) + std::log1p(std::exp(-z(i))) : std::log1p(std::exp(z(i)));
    sum += softplus - y(i) * z(i);
  }
  return sum / n;
}

Vector TaskGradient(TaskKind kind, const Matrix& x, const Vector& y, const Vector& weights) {
  if (x.rows() == 0) return Vector::Zero(weights.size());
  Vector residual = x * weights;
  if (kind == TaskKind::kLogisticClassification) residual = residual.unaryExpr([](double v) { return Sigmoid(v); });
  residual -= y;
  return x.transpose() * residual / static_cast<double>(x.rows());
}

double TaskAccuracy(TaskKind kind, const Matrix& x, const Vector& y, const Vector& weights) {
  const Vector z = x * weights;
  if (kind == TaskKind::kLogisticClassification) {
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) correct += ((z(i) > 0.0) == (y(i) > 0.5)) ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(z.size());
  }
  const double var = (y.array() - y.mean()).square().sum();
  if (var == 0.0) return 0.0;
  return std::clamp(1.0 - (z - y).squaredNorm() / var, 0.0, 1.0);
}

Vector LocalGradient(const ClientState& client, TaskKind kind, const Vector& weights,
                     std::size_t batch_size, std::mt19937_64& rng) {
  const auto rows = static_cast<std::size_t>(client.shard.x.rows());
  if (rows == 0) throw Error(ErrorCode::kInvalidInput, "client shard is empty");
  const std::size_t b = std::min(batch_size, rows);
  std::vector<std::size_t> index(rows);
  std::iota(index.begin(), index.end(), 0);
  index = DrawDistinct(std::move(index), b, rng);
  Matrix x(static_cast<Eigen::Index>(b), client.shard.x.cols());
  Vector y(static_cast<Eigen::Index>(b));
  for (std::size_t i = 0; i < b; ++i) {
    x.row(static_cast<Eigen::Index>(i)) = client.shard.x.row(static_cast<Eigen::Index>(index[i]));
    y(static_cast<Eigen::Index>(i)) = client.shard.y(static_cast<Eigen::Index>(index[i]));
  }
  return TaskGradient(kind, x, y, weights);
}

FilterMetrics ComputeFilterMetrics(const IndexSet& final_benign, const IndexSet& poisoners,
                                   std::size_t n_clients) {
  IndexSet everyone(n_clients);
  std::iota(everyone.begin(), everyone.end(), 0);
  const IndexSet benign_truth = SetDifference(everyone, MakeIndexSet(poisoners));
  const IndexSet final_set = MakeIndexSet(final_benign);
  const double hits = static_cast<double>(SetIntersection(final_set, benign_truth).size());
  FilterMetrics m;
  if (final_set.empty()) {
    m.precision = 1.0;
    m.precision_defined = false;
  } else {
    m.precision = hits / static_cast<double>(final_set.size());
  }
  m.recall = benign_truth.empty() ? 1.0 : hits / static_cast<double>(benign_truth.size());
  return m;
}

ExperimentResult RunExperiment(const ExperimentConfig& config) {
  const Federation fed = MakeFederation(config);
  const std::size_t n = config.n;
  const std::size_t d = config.task.dim;

  std::mt19937_64 schedule_rng(DeriveSeed(config.seed, 0x5c4ed));
  const PoisonSchedule schedule =
      config.attack.kind == AttackKind::kNone
          ? SchedulePoisoning(n, {}, 0.0, config.rounds, 0.0, schedule_rng)
          : SchedulePoisoning(n, fed.malicious, config.malicious_ratio, config.rounds,
                              config.poison_probability, schedule_rng);

  std::mt19937_64 generator_rng(DeriveSeed(config.seed, 0x9e4));
  GeneratorModel generator =
      GeneratorModel::Random(config.encagg.noise_dim, config.encagg.hidden_dim, generator_rng);

  const std::size_t krum_f =
      config.krum_f >= 0 ? static_cast<std::size_t>(config.krum_f) : config.MaliciousCount();

  ExperimentResult result;
  Vector weights = Vector::Zero(static_cast<Eigen::Index>(d));
  std::size_t excluded_rounds = 0;
  double precision_sum = 0.0;
  double recall_sum = 0.0;

  for (std::size_t t = 0; t < config.rounds; ++t) {
    Matrix honest(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
      std::mt19937_64 batch_rng(DeriveSeed(config.seed, 0xba7c, t, i));
      honest.row(static_cast<Eigen::Index>(i)) =
          LocalGradient(fed.clients[i], fed.task.kind, weights, config.batch_size, batch_rng).transpose();
    }
    const GradientMatrix honest_grads(honest);

    const IndexSet poisoners = schedule.PoisonersAt(t);
    Matrix submitted = honest;
    if (!poisoners.empty()) {
      std::mt19937_64 attack_rng(DeriveSeed(config.seed, 0xa77ac, t));
      const AttackContext ctx{honest_grads, fed.known_benign, poisoners, config.encagg.min_samples,
                              config.encagg.r, config.encagg.gamma};
      const std::vector<Vector> crafted = CraftPoisonedGradients(config.attack, ctx, attack_rng);
      for (std::size_t p = 0; p < poisoners.size(); ++p) {
        submitted.row(static_cast<Eigen::Index>(poisoners[p])) = crafted[p].transpose();
      }
    }
    const GradientMatrix grads(submitted);

    RoundRecord record;
    Vector aggregated;
    IndexSet everyone(n);
    std::iota(everyone.begin(), everyone.end(), 0);
    switch (config.aggregator) {
      case AggregatorKind::kEnCAgg: {
        RoundOutput out = RunRound(grads, fed.known_benign, config.encagg, generator,
                                   DeriveSeed(config.seed, 0xe7c, t));
        aggregated = std::move(out.aggregated);
        record = std::move(out.record);
        generator = std::move(out.generator);
        break;
      }
      case AggregatorKind::kKrum: {
        const KrumResult krum = AggKrum(grads, krum_f);
        aggregated = krum.gradient;
        record.final_benign = {krum.selected};
        record.fallback_used = krum.degenerate_neighbourhood;
        break;
      }
      case AggregatorKind::kMean:
        aggregated = AggregateMean(everyone, grads);
        record.final_benign = everyone;
        break;
      case AggregatorKind::kMedian:
        aggregated = AggMedian(grads);
        record.final_benign = everyone;
        break;
      case AggregatorKind::kTrimmedMean:
        aggregated = AggTrimmedMean(grads, config.trim_fraction);
        record.final_benign = everyone;
        break;
      case AggregatorKind::kFlTrust: {
        const Vector server = TaskGradient(fed.task.kind, fed.root.x, fed.root.y, weights);
        aggregated = server.norm() > 0.0 ? AggFlTrust(grads, server) : Vector(server);
        record.final_benign = everyone;
        break;
      }
    }
    if (config.aggregator != AggregatorKind::kEnCAgg) {
      record.retained_round1 = record.final_benign;
      record.discarded = SetDifference(everyone, record.final_benign);
      record.aggregated_norm = aggregated.norm();
    }
    record.round_index = t;

    const FilterMetrics metrics = ComputeFilterMetrics(record.final_benign, poisoners, n);
    record.filter_precision = metrics.precision;
    record.filter_recall = metrics.recall;
    record.precision_defined = metrics.precision_defined;
    precision_sum += metrics.precision;
    recall_sum += metrics.recall;
    if (SetIntersection(record.final_benign, poisoners).empty()) ++excluded_rounds;
    if (record.fallback_used) ++result.fallback_rounds;

    weights = ApplyGlobalUpdate(weights, aggregated, config.learning_rate);
    result.accuracy.push_back(TaskAccuracy(fed.task.kind, fed.holdout.x, fed.holdout.y, weights));
    result.loss.push_back(TaskLoss(fed.task.kind, fed.holdout.x, fed.holdout.y, weights));
    result.poisoners.push_back(poisoners);
    result.records.push_back(std::move(record));
  }

  const std::size_t tail = std::min<std::size_t>(10, config.rounds);
  result.final_accuracy =
      std::accumulate(result.accuracy.end() - static_cast<std::ptrdiff_t>(tail), result.accuracy.end(), 0.0) /
      static_cast<double>(tail);
  const double rounds = static_cast<double>(config.rounds);
  result.mean_precision = precision_sum / rounds;
  result.mean_recall = recall_sum / rounds;
  result.exclusion_rate = static_cast<double>(excluded_rounds) / rounds;
  result.final_weights = weights;
  return result;
}

}  // namespace encagg
